#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dpl/dp/carry.hpp"
#include "dpl/pg/trainer.hpp"
#include "dpl/scorer/optimizer.hpp"
#include "dpl/scorer/scorer.hpp"

namespace dpl {

struct AdditionSample {
  std::vector<PayloadId> a, b;  // most significant first
  std::int64_t target = 0;
  std::vector<int> digits_a, digits_b;  // hidden; diagnostics only
};

/// Fixed random class means, one per digit.
struct DigitPrototypes {
  std::vector<Vec> means;
  std::size_t dim() const { return means.empty() ? 0 : means[0].size(); }
};

DigitPrototypes make_prototypes(std::size_t feature_dim, std::uint64_t seed);

struct AdditionData {
  int n = 1;
  std::vector<AdditionSample> train, test;
  DigitPrototypes prototypes;
  FeatureStore store;
};

/// `count` samples of two n-digit numbers; each payload is its digit's mean
/// plus N(0, sigma^2) noise. Payload ids continue from store.size().
std::vector<AdditionSample> generate_addition_samples(std::size_t count, int n, const DigitPrototypes& protos,
                                                      double sigma, std::mt19937_64& rng, FeatureStore& store);

/// Train and test sets sharing one set of prototypes, all from `seed`.
AdditionData generate_addition_dataset(std::size_t train_count, std::size_t test_count, int n,
                                       std::size_t feature_dim, double sigma, std::uint64_t seed);

/// Perception readout: digit distribution of a payload as the scorer's
/// choice distribution over the integer terms 0..9.
class DigitClassifier {
 public:
  DigitClassifier(const ScorerParams& params, const FeatureStore& store);

  DigitDist distribution(PayloadId p) const;
  int predict(PayloadId p) const;
  /// Adds d/d params of sum_k dprob[k] * P(k | p) into `grad`.
  void backprop_probs(PayloadId p, const DigitDist& probs, const DigitDist& dprob, std::span<double> grad) const;

  /// LogProbPolicy interface for masked REINFORCE.
  double logprob_and_grad(PayloadId p, std::size_t digit, std::span<double> grad, double scale) const;

 private:
  Scorer scorer_;
  std::vector<Term> options_;
};

/// Scorer parameters sized for the addition task.
ScorerParams make_addition_params(const ScorerConfig& cfg, std::size_t feature_dim, std::uint64_t seed);

struct AdditionEpochStats {
  double loss = 0.0;
  double mean_p = 0.0;
  std::size_t updates = 0;
};

/// Exact mode: per sample, loss -p(target) ("linear") or -log p(target)
/// ("log") through the carry DP; one optimizer step per batch.
AdditionEpochStats addition_dp_epoch(std::span<const AdditionSample> data, const FeatureStore& store,
                                     ScorerParams& params, Optimizer& opt, std::size_t batch_size,
                                     const std::string& objective, std::mt19937_64& rng);

/// Loss and gradient over `data` without updating; `grad` is overwritten.
double addition_dp_loss_and_grad(std::span<const AdditionSample> data, const FeatureStore& store,
                                 const ScorerParams& params, const std::string& objective, std::span<double> grad);

using DigitTrajectory = Trajectory<PayloadId>;

/// Masked rollout: digits are drawn in the order a0, b0, a1, b1, ... from
/// the classifier renormalized over digit_mask, so every rollout sums to
/// the target. Return is +1.
DigitTrajectory sample_masked_addition(const AdditionSample& s, const DigitClassifier& policy, std::mt19937_64& rng);

struct AdditionPGStats {
  double mean_weight = 0.0;
  double grad_norm = 0.0;
  bool all_rollouts_valid = true;
};

/// One masked off-policy REINFORCE iteration over a batch of samples.
AdditionPGStats addition_pg_iteration(std::span<const AdditionSample> batch, const FeatureStore& store,
                                      ScorerParams& params, Optimizer& opt, int rollouts, double w_max,
                                      std::mt19937_64& rng);

struct AdditionEval {
  double sum_accuracy = 0.0;
  double digit_accuracy = 0.0;
  std::size_t count = 0;
};

/// Predicted sum = argmax_s P(A + B = s) over the classifier's digit distributions.
AdditionEval evaluate_addition(std::span<const AdditionSample> data, const FeatureStore& store,
                               const ScorerParams& params);

}  // namespace dpl
