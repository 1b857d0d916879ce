#pragma once

#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpl/dp/solver.hpp"
#include "dpl/pg/policy_trainer.hpp"
#include "dpl/tasks/kg.hpp"

namespace dpl {

struct KGQuery {
  Triple triple;
  int label = 1;
};

/// Positives from `positives` plus `negatives_per_positive` filtered
/// corruptions of each, labeled 0.
std::vector<KGQuery> kg_training_queries(const KGDataset& data, std::span<const Triple> positives,
                                         std::size_t negatives_per_positive, CorruptMode mode, std::uint64_t seed);

/// Scorer parameters sized for a KG program.
ScorerParams make_kg_params(const KGDataset& data, const ScorerConfig& cfg, std::uint64_t seed);

using KGTrainConfig = PolicyTrainConfig;
using KGIterationLog = PolicyIterationLog;

/// Labeled goals for the KG queries, with ids indexing `queries`.
std::vector<LabeledQuery> kg_labeled_queries(const KGDataset& data, std::span<const KGQuery> queries);

/// Policy-gradient training over labeled KG queries. A query that is itself
/// a training fact never resolves against that fact.
class KGTrainer {
 public:
  KGTrainer(const KGDataset& data, std::vector<KGQuery> queries, ScorerParams& policy, ScorerParams& critic,
            KGTrainConfig cfg);

  KGIterationLog iterate() { return trainer_.iterate(); }
  int iterations() const { return trainer_.iterations(); }
  DerivationOptions options_for(const Triple& t) const;
  PolicyTrainer& trainer() { return trainer_; }

 private:
  const KGDataset& data_;
  DerivationOptions base_;
  std::vector<KGQuery> queries_;
  PolicyTrainer trainer_;
};

struct KGEvalConfig {
  std::size_t negatives = 20;
  CorruptMode mode = CorruptMode::Both;
  std::uint64_t seed = 1;
  DPOptions dp;
  std::size_t mc_samples = 2000;
  std::size_t beam_width = 8;
  double prior_weight = 1.0;
  const std::unordered_map<std::string, double>* priors = nullptr;
  bool export_proofs = true;
};

struct KGEval {
  RankMetrics metrics;
  std::size_t queries = 0;
  double mean_p_true = 0.0;
  std::size_t proofs_expected = 0;  // positives with p > 0
  std::size_t proofs_replayed = 0;
  std::size_t mc_fallbacks = 0;
};

/// Rank score of a query: log p_success plus the weighted prior, if any.
double kg_rank_score(double p, double prior, double weight);

/// Ranks each query against sampled corruptions by p_success under `model`.
/// Proof trees of positives are written to `proofs` when given.
KGEval evaluate_kg(const KGDataset& data, std::span<const Triple> queries, const Scorer& model,
                   const KGEvalConfig& cfg, std::ostream* proofs = nullptr);

/// Same ranking protocol with i.i.d. uniform scores in place of a model.
RankMetrics evaluate_random_ranking(std::size_t queries, std::size_t negatives, std::uint64_t seed);

/// Mean p_success over the positive queries (the expected return of the
/// policy on them), computed exactly.
double mean_positive_success(const KGDataset& data, std::span<const KGQuery> queries, const Scorer& model,
                             const DPOptions& opts);

}  // namespace dpl
