#pragma once

#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "dpl/dp/solver.hpp"
#include "dpl/pg/trainer.hpp"

namespace dpl {

struct PolicyTrainConfig {
  std::string algo = "ppo";  // ppo | reinforce
  PPOConfig ppo;
  ReinforceConfig reinforce;
  std::size_t queries_per_iter = 16;
  DerivationOptions derivation;
  std::uint64_t seed = 1;
};

struct PolicyIterationLog {
  int iteration = 0;
  UpdateStats stats;
  double mean_return_pos = 0.0;
  double mean_return_neg = 0.0;
};

/// Policy-gradient training over labeled queries of one program. Each
/// iteration samples `queries_per_iter` queries from a reshuffled cycle.
class PolicyTrainer {
 public:
  /// Derivation options per query; defaults to cfg.derivation for all.
  using OptionsFn = std::function<DerivationOptions(const LabeledQuery&)>;

  PolicyTrainer(const Program& program, std::vector<LabeledQuery> queries, ScorerParams& policy,
                ScorerParams& critic, PolicyTrainConfig cfg, OptionsFn options = {});

  PolicyIterationLog iterate();
  int iterations() const { return iteration_; }
  DerivationOptions options_for(const LabeledQuery& q) const;

  /// Optimizer moments, sampling state and iteration count.
  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);

 private:
  const Program& program_;
  std::vector<LabeledQuery> queries_;
  ScorerParams& policy_;
  ScorerParams& critic_;
  PolicyTrainConfig cfg_;
  OptionsFn options_;
  Optimizer policy_opt_, critic_opt_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  int iteration_ = 0;
  double baseline_ = 0.0;
};

}  // namespace dpl
