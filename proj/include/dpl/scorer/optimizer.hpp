#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dpl {

struct OptimizerConfig {
  std::string kind = "adam";  // adam | sgd
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Gradients with a larger L2 norm are rescaled to it; 0 disables.
  double clip_norm = 0.0;
};

/// First-order minimizer over a flat parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::size_t n);

  /// params -= update(grad). Callers maximizing an objective pass -grad.
  void step(std::span<double> params, std::span<const double> grad);
  const OptimizerConfig& config() const { return cfg_; }
  long steps() const { return t_; }

  /// Moment estimates and step count, as exact decimal text.
  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

double l2_norm(std::span<const double> v);

}  // namespace dpl
