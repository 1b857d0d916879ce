#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpl {

enum class Aggregator { Sum, Mean, Affine };

const char* to_string(Aggregator a);
Aggregator parse_aggregator(const std::string& s);

struct ScorerConfig {
  std::size_t dim = 64;
  std::size_t k_var = 16;
  std::size_t k_int = 16;
  Aggregator aggregator = Aggregator::Mean;
  /// Input width of subsymbolic payload features; 0 disables the projection.
  std::size_t feature_dim = 0;
  /// Adds a scalar affine readout of the goal embedding (used by critics).
  bool readout = false;
  double init_std = 0.1;
};

struct Block {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The flat parameter vector of a scorer, partitioned into named row-major
/// blocks:
///   symbol     [n_symbols x d]      predicates, constants, functors
///   var_slot   [k_var x d]          canonical variable slots
///   int_slot   [k_int x d]          integers, by value mod k_int
///   true/false [1 x d]
///   compose_w  [d x d(1+max_arity)], compose_b [1 x d]
///   agg_w      [d x d], agg_b [1 x d]            (affine aggregator only)
///   project_w  [d x feature_dim], project_b [1 x d]  (feature_dim > 0)
///   readout_w  [1 x d], readout_b [1 x 1]          (readout only)
class ScorerParams {
 public:
  ScorerParams() = default;

  /// Gaussian(0, init_std) initialization; the affine aggregator starts at
  /// the identity so it initially agrees with the mean.
  static ScorerParams random(const ScorerConfig& cfg, std::size_t n_symbols, std::size_t max_arity,
                             std::mt19937_64& rng);
  static ScorerParams zeros(const ScorerConfig& cfg, std::size_t n_symbols, std::size_t max_arity);

  const ScorerConfig& config() const { return cfg_; }
  std::size_t dim() const { return cfg_.dim; }
  std::size_t n_symbols() const { return n_symbols_; }
  std::size_t max_arity() const { return max_arity_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(const std::string& name) const;
  bool has_block(const std::string& name) const;

  std::size_t symbol_offset(std::size_t s) const;
  std::size_t var_offset(std::size_t slot) const { return var_.offset + (slot % cfg_.k_var) * cfg_.dim; }
  std::size_t int_offset(std::int64_t v) const;
  std::size_t true_offset() const { return true_.offset; }
  std::size_t false_offset() const { return false_.offset; }
  const Block& compose_w() const { return compose_w_; }
  const Block& compose_b() const { return compose_b_; }
  const Block& agg_w() const { return agg_w_; }
  const Block& agg_b() const { return agg_b_; }
  const Block& project_w() const { return project_w_; }
  const Block& project_b() const { return project_b_; }
  const Block& readout_w() const { return readout_w_; }
  const Block& readout_b() const { return readout_b_; }

  const double* at(std::size_t offset) const { return values_.data() + offset; }
  double* at(std::size_t offset) { return values_.data() + offset; }

  /// Free-form key/value metadata stored alongside the blocks.
  std::map<std::string, std::string>& metadata() { return meta_; }
  const std::map<std::string, std::string>& metadata() const { return meta_; }

  void save(std::ostream& os) const;
  static ScorerParams load(std::istream& is);
  void save_file(const std::string& path) const;
  static ScorerParams load_file(const std::string& path);

  friend bool operator==(const ScorerParams& a, const ScorerParams& b) {
    return a.values_ == b.values_ && a.n_symbols_ == b.n_symbols_ && a.max_arity_ == b.max_arity_;
  }

 private:
  void layout();

  ScorerConfig cfg_;
  std::size_t n_symbols_ = 0;
  std::size_t max_arity_ = 0;
  std::vector<double> values_;
  std::vector<Block> blocks_;
  Block symbol_, var_, int_, true_, false_, compose_w_, compose_b_, agg_w_, agg_b_, project_w_, project_b_,
      readout_w_, readout_b_;
  std::map<std::string, std::string> meta_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace dpl
