#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpl/mdp/env.hpp"
#include "dpl/scorer/optimizer.hpp"
#include "dpl/scorer/scorer.hpp"

namespace dpl {

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One decision of an episode. `decision` is the state the policy saw: a
/// candidate set for proof episodes, a perception choice for addition.
template <class D>
struct TrajectoryStep {
  D decision;
  std::uint64_t fingerprint = 0;
  std::size_t action = 0;
  double behavior_logp = 0.0;
  double target_logp = 0.0;
};

template <class D>
struct Trajectory {
  int query_id = 0;
  int label = 0;
  std::vector<TrajectoryStep<D>> steps;
  double ret = 0.0;  // in {-1, 0, +1}
  std::optional<Outcome> outcome;
  bool mask_exhausted = false;

  double behavior_logp() const {
    double s = 0;
    for (const auto& st : steps) s += st.behavior_logp;
    return s;
  }
  double target_logp() const {
    double s = 0;
    for (const auto& st : steps) s += st.target_logp;
    return s;
  }
};

using LogicTrajectory = Trajectory<CandidateSet>;

/// Order-sensitive hash of a candidate set's successor goals.
std::uint64_t fingerprint(const CandidateSet& cs);

/// Index drawn from `probs` with one 53-bit uniform from `rng`.
std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng);

/// Allowed actions of `legal` at state `s`; an empty result allows all.
using MaskProvider = std::function<std::vector<bool>(const EnvState& s, const CandidateSet& legal)>;

/// Rolls out one episode of `env` under `policy`. With a mask, actions are
/// drawn from the policy renormalized over allowed actions; behavior_logp
/// records the masked probability and target_logp the unmasked one. A mask
/// that allows nothing ends the episode as False with mask_exhausted set.
LogicTrajectory sample_episode(const ProofEnv& env, const Scorer& policy, const Goal& query, int label, int query_id,
                               std::mt19937_64& rng, const MaskProvider* mask = nullptr);

/// exp(sum target - sum behavior), clipped to [0, w_max].
template <class D>
double importance_weight(const Trajectory<D>& t, double w_max = 10.0) {
  double w = std::exp(t.target_logp() - t.behavior_logp());
  if (!(w >= 0.0)) w = 0.0;
  return std::min(w, w_max);
}

/// Policies usable by the generic estimators: log p(action | decision) and
/// its gradient, accumulated with a scale.
template <class P, class D>
concept LogProbPolicy = requires(const P& p, const D& d, std::size_t a, std::span<double> g) {
  { p.logprob_and_grad(d, a, g, 1.0) } -> std::convertible_to<double>;
};

struct ReinforceConfig {
  OptimizerConfig optimizer;
  double w_max = 10.0;
  /// Subtract a moving average of returns; off by default.
  bool baseline = false;
  double baseline_decay = 0.9;
};

struct UpdateStats {
  std::size_t episodes = 0;
  double mean_return = 0.0;
  double mean_weight = 0.0;
  double grad_norm = 0.0;
  double success_rate = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double critic_loss = 0.0;
  double approx_kl = 0.0;
  int epochs_run = 0;
};

/// Adds scale * (sum over steps of d log p(action) / d params) into `grad`.
template <class D, LogProbPolicy<D> P>
void accumulate_score_function(const Trajectory<D>& t, const P& policy, double scale, std::span<double> grad) {
  if (scale == 0.0) return;
  for (const auto& st : t.steps) policy.logprob_and_grad(st.decision, st.action, grad, scale);
}

/// Off-policy REINFORCE estimate of grad J averaged over the batch:
/// mean_t w(t) (R(t) - b) sum_steps grad log p. Overwrites `grad`.
template <class D, LogProbPolicy<D> P>
UpdateStats reinforce_gradient(std::span<const Trajectory<D>> batch, const P& policy, std::span<double> grad,
                               double w_max = 10.0, double baseline = 0.0) {
  if (batch.empty()) throw std::invalid_argument("reinforce: empty batch");
  std::fill(grad.begin(), grad.end(), 0.0);
  UpdateStats st;
  st.episodes = batch.size();
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) {
    double w = importance_weight(t, w_max);
    st.mean_return += t.ret * inv;
    st.mean_weight += w * inv;
    st.success_rate += (t.outcome == Outcome::True ? 1.0 : 0.0) * inv;
    accumulate_score_function(t, policy, w * (t.ret - baseline) * inv, grad);
  }
  st.grad_norm = l2_norm(grad);
  if (!std::isfinite(st.grad_norm)) throw NonFiniteGradient("reinforce: non-finite gradient");
  return st;
}

/// One ascent step on J with the REINFORCE estimate. `baseline_state`
/// carries the moving-average baseline between calls when enabled.
template <class D, LogProbPolicy<D> P>
UpdateStats reinforce_update(std::span<const Trajectory<D>> batch, const P& policy, std::span<double> params,
                             Optimizer& opt, const ReinforceConfig& cfg, double* baseline_state = nullptr) {
  std::vector<double> grad(params.size());
  double b = cfg.baseline && baseline_state ? *baseline_state : 0.0;
  UpdateStats st = reinforce_gradient(batch, policy, std::span<double>(grad), cfg.w_max, b);
  for (double& g : grad) g = -g;
  opt.step(params, grad);
  if (cfg.baseline && baseline_state)
    *baseline_state = cfg.baseline_decay * *baseline_state + (1.0 - cfg.baseline_decay) * st.mean_return;
  return st;
}

struct PPOConfig {
  double clip = 0.2;
  double entropy_coef = 0.2;
  double critic_coef = 0.5;
  int epochs = 4;
  std::size_t minibatch = 64;
  OptimizerConfig optimizer;
  int rollouts = 4;
  /// Stop inner epochs once the approximate KL exceeds this; 0 disables.
  double kl_stop = 0.0;
  /// Advantages are standardized when the batch has at least this many steps.
  std::size_t normalize_min = 8;

  void validate() const;
};

/// Clipped-surrogate update of `policy_params` and squared-error regression
/// of the critic toward Monte-Carlo returns. Advantages are return minus the
/// critic's value at collection time.
UpdateStats ppo_update(std::span<const LogicTrajectory> batch, ScorerParams& policy_params,
                       ScorerParams& critic_params, const FeatureStore* store, Optimizer& policy_opt,
                       Optimizer& critic_opt, const PPOConfig& cfg, std::mt19937_64& rng);

/// Mean policy entropy over the non-forced steps of a batch.
double mean_entropy(std::span<const LogicTrajectory> batch, const Scorer& policy);

}  // namespace dpl
