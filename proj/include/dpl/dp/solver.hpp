#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpl/scorer/optimizer.hpp"
#include "dpl/scorer/scorer.hpp"
#include "dpl/sld/derivation.hpp"

namespace dpl {

/// Raised when the reachable goal space exceeds the state cap.
class GoalSpaceExplosion : public ResourceLimit {
 public:
  using ResourceLimit::ResourceLimit;
};

struct DPOptions {
  DerivationOptions derivation;
  std::size_t max_states = 1'000'000;
};

/// One memoized value: p = sum_k probs[k] * p(children[k]).
struct DPNode {
  Goal goal;
  int remaining = 0;
  double p = 0.0;
  bool forced = false;
  std::vector<int> children;
  std::vector<double> probs;
  CandidateSet cs;
};

/// Exact success probability by memoized value recursion over the goal
/// graph reachable from one query.
///
/// A first pass explores the graph up to max_depth and computes, for every
/// goal whose reachable subgraph is acyclic and fully explored, its height.
/// Such a goal's value depends on nothing else once the remaining depth
/// covers the height, and it is memoized on the goal alone. Otherwise the
/// key adds the remaining depth and, with memory on, the visited goals of
/// the current path.
class DPSolver {
 public:
  DPSolver(const Program& program, const TransitionModel& model, DPOptions opts = {});

  /// p_success(query); rebuilds the table.
  double solve(const Goal& query);
  /// V(query, y) = (2y - 1) p_success(query).
  double value(const Goal& query, int label) { return (2.0 * label - 1.0) * solve(query); }

  /// Adds scale * d p_success / d params into `grad` for the last solved
  /// query. Requires the model to be a Scorer.
  void backprop(double scale, std::span<double> grad) const;

  const std::vector<DPNode>& table() const { return nodes_; }
  int root() const { return root_; }
  std::size_t explored_goals() const { return heights_.size(); }
  bool cyclic() const { return cyclic_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Key {
    Goal goal;
    int remaining;
    std::vector<int> visited;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  static constexpr int kUnbounded = -1;

  void explore(const Goal& query);
  int intern(const Goal& g);
  int solve_node(const Goal& g, int remaining, VarId next_var);
  std::vector<double> probabilities(const CandidateSet& cs);
  const EmbeddingTape& tape(const Goal& g);

  const Program& program_;
  const TransitionModel& model_;
  const Scorer* scorer_;
  DPOptions opts_;

  std::unordered_map<Goal, int, GoalHash> goal_ids_;
  std::vector<int> heights_;  // kUnbounded when cyclic or truncated
  bool cyclic_ = false;

  std::vector<DPNode> nodes_;
  std::unordered_map<Key, int, KeyHash> memo_;
  std::vector<Goal> path_;
  std::vector<int> path_ids_;
  int root_ = -1;
  std::vector<std::string> warnings_;
  mutable std::unordered_map<Goal, EmbeddingTape, GoalHash> tapes_;
};

double success_probability_dp(const Goal& query, const Program& program, const TransitionModel& model,
                              const DPOptions& opts = {});

struct LabeledQuery {
  Goal goal;
  int label = 1;
  int id = 0;
};

struct DPTrainConfig {
  OptimizerConfig optimizer;
  /// Queries per update; 0 means the whole dataset (one update per epoch).
  std::size_t batch_size = 0;
  /// "linear": sum (1 - 2y) p.  "log": cross-entropy on p.
  std::string objective = "linear";
};

struct EpochStats {
  double loss = 0.0;
  double objective_j = 0.0;  // sum (2y - 1) p, equal to -loss for "linear"
  double mean_p_pos = 0.0;
  double mean_p_neg = 0.0;
  double grad_norm = 0.0;
  std::size_t updates = 0;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loss and gradient over a dataset without updating; `grad` is overwritten.
EpochStats dp_loss_and_grad(std::span<const LabeledQuery> data, const Program& program, const ScorerParams& params,
                            const FeatureStore* store, const DPOptions& opts, const std::string& objective,
                            std::span<double> grad);

/// One pass over `data` in order, one optimizer step per batch.
EpochStats dp_train_epoch(std::span<const LabeledQuery> data, const Program& program, ScorerParams& params,
                          const FeatureStore* store, Optimizer& opt, const DPOptions& opts,
                          const DPTrainConfig& cfg);

}  // namespace dpl
