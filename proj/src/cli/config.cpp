#include "dpl/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dpl::cli {

namespace {

namespace fs = std::filesystem;

const std::map<std::string, std::string>& schema() {
  static const std::map<std::string, std::string> s = {
      {"task", "logic"},  // logic | addition | kg | kinship
      {"seed", "1"},
      {"data_seed", "42"},
      {"out_dir", "out"},
      {"checkpoint", ""},
      {"resume", "false"},
      // logic task
      {"program", ""},
      {"queries", ""},
      {"test_queries", ""},
      // knowledge graph from files
      {"kg.train", ""},
      {"kg.valid", ""},
      {"kg.test", ""},
      {"kg.rules", ""},
      {"kg.priors", ""},
      {"kg.prior_weight", "1"},
      {"kg.negatives", "20"},
      {"kg.corrupt", "both"},
      {"kg.train_negatives", "2"},
      {"kg.split", "test"},
      // synthetic kinship graph
      {"kinship.families", "4"},
      {"kinship.children", "3"},
      {"kinship.grandchildren_min", "2"},
      {"kinship.grandchildren_max", "4"},
      {"kinship.fact_fraction", "0.4"},
      {"kinship.valid_fraction", "0.3"},
      // synthetic digit addition
      {"addition.n", "2"},
      {"addition.train", "2000"},
      {"addition.test", "500"},
      {"addition.feature_dim", "16"},
      {"addition.sigma", "0.7"},
      // scorer
      {"scorer.dim", "64"},
      {"scorer.k_var", "16"},
      {"scorer.k_int", "16"},
      {"scorer.aggregator", "mean"},
      {"scorer.init_std", "0.1"},
      // derivations
      {"max_depth", "20"},
      {"memory", "true"},
      {"occurs_check", "false"},
      {"max_states", "1000000"},
      {"max_derivations", "1000000"},
      // optimization
      {"optimizer", "adam"},
      {"lr", "3e-4"},
      {"clip_norm", "0"},
      {"epochs", "10"},
      {"batch_size", "0"},
      {"objective", "linear"},
      {"restarts", "1"},
      {"restart_epochs", "5"},
      // policy gradient
      {"pg.algo", "ppo"},
      {"pg.iters_per_epoch", "10"},
      {"pg.queries_per_iter", "16"},
      {"pg.rollouts", "4"},
      {"ppo.clip", "0.2"},
      {"ppo.entropy", "0.2"},
      {"ppo.critic", "0.5"},
      {"ppo.epochs", "4"},
      {"ppo.minibatch", "64"},
      {"ppo.kl_stop", "0"},
      {"reinforce.w_max", "10"},
      {"reinforce.baseline", "false"},
      // prove
      {"query", ""},
      {"beam_width", "8"},
      {"mc_samples", "2000"},
      // oracle-check
      {"oracle.queries", "20"},
      {"oracle.pairs", "100"},
  };
  return s;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& path_keys() {
  static const std::vector<std::string> k = {"out_dir", "checkpoint", "program", "queries", "test_queries",
                                             "kg.train", "kg.valid",  "kg.test", "kg.rules", "kg.priors"};
  return k;
}

RunConfig::RunConfig() : values_(schema()) {}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), fs::path(path).parent_path().string());
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& base_dir) {
  if (!schema().count(key)) throw UsageError("unknown config key '" + key + "'");
  const auto& pk = path_keys();
  if (!value.empty() && !base_dir.empty() && std::find(pk.begin(), pk.end(), key) != pk.end() &&
      fs::path(value).is_relative()) {
    values_[key] = (fs::path(base_dir) / value).lexically_normal().string();
  } else {
    values_[key] = value;
  }
}

void RunConfig::override_with(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

bool RunConfig::has(const std::string& key) const { return !str(key).empty(); }

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const {
  const std::string& v = str(key);
  double x = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw UsageError(key + ": expected a number, got '" + v + "'");
  return x;
}

std::int64_t RunConfig::integer(const std::string& key) const {
  const std::string& v = str(key);
  std::int64_t x = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw UsageError(key + ": expected an integer, got '" + v + "'");
  return x;
}

std::size_t RunConfig::count(const std::string& key) const {
  std::int64_t x = integer(key);
  if (x < 0) throw UsageError(key + ": must be non-negative");
  return static_cast<std::size_t>(x);
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(key + ": expected true or false, got '" + v + "'");
}

std::string RunConfig::existing_file(const std::string& key) const {
  const std::string& v = str(key);
  if (v.empty()) throw UsageError("config key '" + key + "' is required");
  if (!fs::is_regular_file(v)) throw InputError(key + ": no such file '" + v + "'");
  return v;
}

std::string RunConfig::text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::checkpoint_path() const {
  if (has("checkpoint")) return str("checkpoint");
  return (fs::path(str("out_dir")) / "checkpoint.txt").string();
}

}  // namespace dpl::cli
