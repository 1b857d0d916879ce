#include "dpl/scorer/params.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dpl {

namespace {
constexpr const char* kMagic = "dproflog-params";
constexpr int kVersion = 1;
}  // namespace

const char* to_string(Aggregator a) {
  switch (a) {
    case Aggregator::Sum: return "sum";
    case Aggregator::Mean: return "mean";
    case Aggregator::Affine: return "affine";
  }
  return "?";
}

Aggregator parse_aggregator(const std::string& s) {
  if (s == "sum") return Aggregator::Sum;
  if (s == "mean") return Aggregator::Mean;
  if (s == "affine") return Aggregator::Affine;
  throw std::invalid_argument("unknown aggregator '" + s + "' (expected sum, mean or affine)");
}

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void ScorerParams::layout() {
  const std::size_t d = cfg_.dim;
  if (d == 0) throw std::invalid_argument("scorer dimension must be positive");
  if (cfg_.k_var == 0 || cfg_.k_int == 0) throw std::invalid_argument("slot pools must be non-empty");
  blocks_.clear();
  std::size_t off = 0;
  auto add = [&](Block& b, const char* name, std::size_t rows, std::size_t cols) {
    b = Block{name, off, rows, cols};
    off += b.size();
    if (b.size() > 0) blocks_.push_back(b);
  };
  add(symbol_, "symbol", n_symbols_, d);
  add(var_, "var_slot", cfg_.k_var, d);
  add(int_, "int_slot", cfg_.k_int, d);
  add(true_, "true", 1, d);
  add(false_, "false", 1, d);
  add(compose_w_, "compose_w", d, d * (1 + max_arity_));
  add(compose_b_, "compose_b", 1, d);
  bool affine = cfg_.aggregator == Aggregator::Affine;
  add(agg_w_, "agg_w", affine ? d : 0, d);
  add(agg_b_, "agg_b", affine ? 1 : 0, d);
  add(project_w_, "project_w", cfg_.feature_dim > 0 ? d : 0, cfg_.feature_dim);
  add(project_b_, "project_b", cfg_.feature_dim > 0 ? 1 : 0, d);
  add(readout_w_, "readout_w", cfg_.readout ? 1 : 0, d);
  add(readout_b_, "readout_b", cfg_.readout ? 1 : 0, 1);
  values_.assign(off, 0.0);
}

ScorerParams ScorerParams::zeros(const ScorerConfig& cfg, std::size_t n_symbols, std::size_t max_arity) {
  ScorerParams p;
  p.cfg_ = cfg;
  p.n_symbols_ = n_symbols;
  p.max_arity_ = max_arity;
  p.layout();
  return p;
}

ScorerParams ScorerParams::random(const ScorerConfig& cfg, std::size_t n_symbols, std::size_t max_arity,
                                  std::mt19937_64& rng) {
  ScorerParams p = zeros(cfg, n_symbols, max_arity);
  std::normal_distribution<double> n(0.0, cfg.init_std);
  for (double& v : p.values_) v = n(rng);
  if (cfg.aggregator == Aggregator::Affine) {
    const std::size_t d = cfg.dim;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) p.values_[p.agg_w_.offset + i * d + j] = i == j ? 1.0 : 0.0;
    for (std::size_t i = 0; i < d; ++i) p.values_[p.agg_b_.offset + i] = 0.0;
  }
  return p;
}

const Block& ScorerParams::block(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b;
  throw std::out_of_range("no parameter block '" + name + "'");
}

bool ScorerParams::has_block(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return true;
  return false;
}

std::size_t ScorerParams::symbol_offset(std::size_t s) const {
  if (s >= n_symbols_)
    throw std::out_of_range("symbol id " + std::to_string(s) + " has no embedding row (table has " +
                            std::to_string(n_symbols_) + ")");
  return symbol_.offset + s * cfg_.dim;
}

std::size_t ScorerParams::int_offset(std::int64_t v) const {
  auto k = static_cast<std::int64_t>(cfg_.k_int);
  return int_.offset + static_cast<std::size_t>(((v % k) + k) % k) * cfg_.dim;
}

void ScorerParams::save(std::ostream& os) const {
  os << kMagic << ' ' << kVersion << '\n';
  os << "dim " << cfg_.dim << '\n';
  os << "k_var " << cfg_.k_var << '\n';
  os << "k_int " << cfg_.k_int << '\n';
  os << "aggregator " << to_string(cfg_.aggregator) << '\n';
  os << "feature_dim " << cfg_.feature_dim << '\n';
  os << "readout " << (cfg_.readout ? 1 : 0) << '\n';
  os << "init_std " << format_double(cfg_.init_std) << '\n';
  os << "n_symbols " << n_symbols_ << '\n';
  os << "max_arity " << max_arity_ << '\n';
  for (const auto& [k, v] : meta_) os << "meta " << k << ' ' << v << '\n';
  for (const auto& b : blocks_) {
    os << "block " << b.name << ' ' << b.rows << ' ' << b.cols << '\n';
    for (std::size_t r = 0; r < b.rows; ++r) {
      for (std::size_t c = 0; c < b.cols; ++c) {
        if (c) os << ' ';
        os << format_double(values_[b.offset + r * b.cols + c]);
      }
      os << '\n';
    }
  }
  os << "end\n";
}

ScorerParams ScorerParams::load(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != kMagic) throw CheckpointError("not a parameter checkpoint");
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  ScorerConfig cfg;
  std::size_t n_symbols = 0, max_arity = 0;
  std::map<std::string, std::string> meta;
  std::string key;
  auto need = [&](auto& v) {
    if (!(is >> v)) throw CheckpointError("truncated checkpoint header at '" + key + "'");
  };
  while (is >> key && key != "block") {
    if (key == "dim") need(cfg.dim);
    else if (key == "k_var") need(cfg.k_var);
    else if (key == "k_int") need(cfg.k_int);
    else if (key == "feature_dim") need(cfg.feature_dim);
    else if (key == "n_symbols") need(n_symbols);
    else if (key == "max_arity") need(max_arity);
    else if (key == "readout") { int r = 0; need(r); cfg.readout = r != 0; }
    else if (key == "aggregator") { std::string a; need(a); cfg.aggregator = parse_aggregator(a); }
    else if (key == "init_std") { std::string s; need(s); cfg.init_std = std::stod(s); }
    else if (key == "meta") {
      std::string k, v;
      need(k);
      std::getline(is, v);
      if (!v.empty() && v.front() == ' ') v.erase(0, 1);
      meta[k] = v;
    } else {
      throw CheckpointError("unknown checkpoint field '" + key + "'");
    }
  }
  ScorerParams p = zeros(cfg, n_symbols, max_arity);
  p.meta_ = std::move(meta);
  std::size_t seen = 0;
  while (key == "block") {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(is >> name >> rows >> cols)) throw CheckpointError("truncated block header");
    const Block& b = p.block(name);
    if (b.rows != rows || b.cols != cols)
      throw CheckpointError("block '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                            ", expected " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    for (std::size_t i = 0; i < b.size(); ++i) {
      std::string tok;
      if (!(is >> tok)) throw CheckpointError("truncated block '" + name + "'");
      double v = 0;
      auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
        throw CheckpointError("bad number '" + tok + "' in block '" + name + "'");
      p.values_[b.offset + i] = v;
    }
    ++seen;
    if (!(is >> key)) throw CheckpointError("missing end marker");
  }
  if (key != "end") throw CheckpointError("unexpected token '" + key + "'");
  if (seen != p.blocks_.size()) throw CheckpointError("checkpoint is missing parameter blocks");
  return p;
}

void ScorerParams::save_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw CheckpointError("cannot write checkpoint '" + path + "'");
  save(os);
}

ScorerParams ScorerParams::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CheckpointError("cannot read checkpoint '" + path + "'");
  return load(is);
}

}  // namespace dpl
