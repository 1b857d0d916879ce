#include "dpl/tasks/kg.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "dpl/logic/parser.hpp"

namespace dpl {

namespace {

bool is_identifier(const std::string& s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_ws(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

}  // namespace

std::vector<Triple> parse_triples(const std::string& text, const std::string& source) {
  std::vector<Triple> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3)
      throw DataError(source + ":" + std::to_string(lineno) + ": expected head<TAB>relation<TAB>tail");
    for (const auto& c : cols)
      if (!is_identifier(c))
        throw DataError(source + ":" + std::to_string(lineno) + ": '" + c + "' is not a lowercase identifier");
    out.push_back({cols[0], cols[1], cols[2]});
  }
  return out;
}

std::string format_triples(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) out += t.head + '\t' + t.relation + '\t' + t.tail + '\n';
  return out;
}

std::set<Triple> KGDataset::known() const {
  std::set<Triple> k(train.begin(), train.end());
  k.insert(valid.begin(), valid.end());
  k.insert(test.begin(), test.end());
  return k;
}

Goal KGDataset::goal(const Triple& t) const {
  SymbolTable& s = program.symbols();
  Atom a;
  a.predicate = s.intern(t.relation);
  a.args = {Term::constant(s.intern(t.head)), Term::constant(s.intern(t.tail))};
  return Goal({a});
}

KGDataset build_kg(const std::string& rules_text, const std::vector<Triple>& train, const std::vector<Triple>& valid,
                   const std::vector<Triple>& test) {
  KGDataset d;
  d.program = parse_program(rules_text);
  std::set<Triple> train_set(train.begin(), train.end());
  for (const auto& t : test)
    if (train_set.count(t))
      throw DataError("test triple " + t.relation + "(" + t.head + "," + t.tail + ") also appears in train");
  d.train = train;
  d.valid = valid;
  d.test = test;
  SymbolTable& s = d.program.symbols();
  std::set<std::string> ents, rels;
  for (const auto* split : {&train, &valid, &test})
    for (const auto& t : *split) {
      ents.insert(t.head);
      ents.insert(t.tail);
      rels.insert(t.relation);
    }
  d.entities.assign(ents.begin(), ents.end());
  d.relations.assign(rels.begin(), rels.end());
  for (const auto& e : d.entities) s.intern(e);
  for (const auto& t : train) {
    if (d.fact_clause.count(t)) continue;
    Atom head = d.goal(t).leftmost();
    d.fact_clause[t] = d.program.add_clause(std::move(head), {});
  }
  return d;
}

KGDataset load_kg(const std::string& train_path, const std::string& valid_path, const std::string& test_path,
                  const std::string& rules_path) {
  return build_kg(read_file(rules_path), parse_triples(read_file(train_path), train_path),
                  parse_triples(read_file(valid_path), valid_path), parse_triples(read_file(test_path), test_path));
}

CorruptMode parse_corrupt_mode(const std::string& s) {
  if (s == "head") return CorruptMode::Head;
  if (s == "tail") return CorruptMode::Tail;
  if (s == "both") return CorruptMode::Both;
  throw std::invalid_argument("corruption mode must be head, tail or both");
}

std::vector<Triple> sample_negatives(const Triple& q, std::size_t k, const std::vector<std::string>& entities,
                                     CorruptMode mode, const std::set<Triple>& known, std::uint64_t seed) {
  if (k + 1 > entities.size()) throw DataError("need at least k + 1 entities to sample k corruptions");
  std::vector<Triple> pool;
  for (const auto& e : entities) {
    if (mode != CorruptMode::Tail && e != q.head) pool.push_back({e, q.relation, q.tail});
    if (mode != CorruptMode::Head && e != q.tail) pool.push_back({q.head, q.relation, e});
  }
  std::erase_if(pool, [&](const Triple& t) { return known.count(t) > 0 || t == q; });
  if (pool.size() < k)
    throw DataError("only " + std::to_string(pool.size()) + " unknown corruptions available, " + std::to_string(k) +
                    " requested");
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with explicit draws so the order is library independent.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::size_t RankResult::rank() const {
  std::size_t r = 1;
  for (double s : corrupt_scores) r += s >= true_score;
  return r;
}

RankMetrics rank_metrics(const std::vector<RankResult>& results, const std::vector<int>& ns) {
  if (results.empty()) throw std::invalid_argument("rank_metrics: no results");
  RankMetrics m;
  std::map<int, std::size_t> hit;
  for (int n : ns) hit[n] = 0;
  for (const auto& r : results) {
    std::size_t rank = r.rank();
    m.mrr += 1.0 / static_cast<double>(rank);
    for (int n : ns) hit[n] += rank <= static_cast<std::size_t>(n);
  }
  const auto total = static_cast<double>(results.size());
  m.mrr /= total;
  for (const auto& [n, h] : hit) m.hits[n] = static_cast<double>(h) / total;
  return m;
}

KinshipData generate_kinship(const KinshipSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  auto coin = [&] { return (rng() >> 63) != 0; };
  auto uniform = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  struct Person {
    std::string name;
    bool male;
    int parent;
  };
  std::vector<Person> people;
  auto add = [&](int parent) {
    people.push_back({"p" + std::to_string(people.size()), coin(), parent});
    return static_cast<int>(people.size()) - 1;
  };
  for (int f = 0; f < spec.families; ++f) {
    int root = add(-1);
    for (int c = 0; c < spec.children; ++c) {
      int child = add(root);
      int g = uniform(spec.grandchildren_min, spec.grandchildren_max);
      for (int i = 0; i < g; ++i) add(child);
    }
  }

  std::vector<Triple> base, target;
  const int n = static_cast<int>(people.size());
  for (int y = 0; y < n; ++y) {
    const Person& py = people[static_cast<std::size_t>(y)];
    if (py.parent >= 0) base.push_back({people[static_cast<std::size_t>(py.parent)].name, "parent", py.name});
    for (int x = 0; x < n; ++x) {
      const Person& px = people[static_cast<std::size_t>(x)];
      if (x != y && px.parent >= 0 && px.parent == py.parent)
        base.push_back({px.name, px.male ? "brother" : "sister", py.name});
    }
  }
  for (int y = 0; y < n; ++y) {
    int par = people[static_cast<std::size_t>(y)].parent;
    if (par < 0) continue;
    int grand = people[static_cast<std::size_t>(par)].parent;
    if (grand < 0) continue;
    for (int x = 0; x < n; ++x) {
      const Person& px = people[static_cast<std::size_t>(x)];
      if (x != par && px.parent == grand)
        target.push_back({px.name, px.male ? "uncle" : "aunt", people[static_cast<std::size_t>(y)].name});
    }
  }
  for (std::size_t i = target.size(); i > 1; --i) std::swap(target[i - 1], target[rng() % i]);
  const std::size_t n_fact = static_cast<std::size_t>(spec.fact_fraction * static_cast<double>(target.size()));
  const std::size_t n_valid = static_cast<std::size_t>(spec.valid_fraction * static_cast<double>(target.size()));

  KinshipData out;
  out.train = base;
  out.train.insert(out.train.end(), target.begin(), target.begin() + static_cast<std::ptrdiff_t>(n_fact));
  out.valid.assign(target.begin() + static_cast<std::ptrdiff_t>(n_fact),
                   target.begin() + static_cast<std::ptrdiff_t>(n_fact + n_valid));
  out.test.assign(target.begin() + static_cast<std::ptrdiff_t>(n_fact + n_valid), target.end());
  out.rules =
      "uncle(X, Y) :- brother(X, Z), parent(Z, Y).\n"
      "uncle(X, Y) :- brother(Z, Y), uncle(X, Z).\n"
      "uncle(X, Y) :- sister(Z, Y), uncle(X, Z).\n"
      "uncle(X, Y) :- brother(X, Y).\n"
      "uncle(X, Y) :- parent(X, Y).\n"
      "aunt(X, Y) :- sister(X, Z), parent(Z, Y).\n"
      "aunt(X, Y) :- brother(Z, Y), aunt(X, Z).\n"
      "aunt(X, Y) :- sister(Z, Y), aunt(X, Z).\n"
      "aunt(X, Y) :- sister(X, Y).\n"
      "aunt(X, Y) :- parent(X, Y).\n";
  return out;
}

std::unordered_map<std::string, double> load_priors(const std::string& path) {
  std::istringstream in(read_file(path));
  std::unordered_map<std::string, double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError(path + ":" + std::to_string(lineno) + ": expected goal<TAB>score");
    try {
      std::size_t used = 0;
      std::string num = line.substr(tab + 1);
      double v = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing");
      out[strip_ws(line.substr(0, tab))] = v;
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad score");
    }
  }
  return out;
}

}  // namespace dpl
