#include "dpl/pg/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace dpl {

std::uint64_t fingerprint(const CandidateSet& cs) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 1099511628211ULL;
  };
  mix(cs.goal.hash());
  for (std::size_t k = 0; k < cs.size(); ++k) mix(cs.next_goal(k).hash());
  return h;
}

std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_index: empty distribution");
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  double acc = 0.0, target = u * total;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (target < acc && probs[k] > 0.0) return k;
  }
  for (std::size_t k = probs.size(); k-- > 0;)
    if (probs[k] > 0.0) return k;
  return probs.size() - 1;
}

LogicTrajectory sample_episode(const ProofEnv& env, const Scorer& policy, const Goal& query, int label, int query_id,
                               std::mt19937_64& rng, const MaskProvider* mask) {
  LogicTrajectory t;
  t.query_id = query_id;
  t.label = label;
  EnvState s = env.reset(query, label, query_id);
  while (true) {
    CandidateSet legal = env.legal_actions(s);
    if (legal.empty()) {
      t.outcome = Outcome::False;
      break;
    }
    std::vector<double> p, logp;
    if (legal.forced) {
      p = action_probabilities(policy, legal);
      logp.assign(p.size(), 0.0);
    } else {
      TransitionDistribution d = policy.transition_distribution(legal);
      p = std::move(d.probs);
      logp = std::move(d.log_probs);
    }
    std::vector<double> q = p;
    double log_z = 0.0;
    if (mask && *mask) {
      std::vector<bool> allowed = (*mask)(s, legal);
      if (!allowed.empty()) {
        double z = 0;
        for (std::size_t k = 0; k < q.size(); ++k) {
          if (!allowed[k]) q[k] = 0.0;
          z += q[k];
        }
        if (z <= 0.0) {
          t.mask_exhausted = true;
          t.outcome = Outcome::False;
          break;
        }
        for (double& v : q) v /= z;
        log_z = std::log(z);
      }
    }
    std::size_t a = sample_index(q, rng);
    TrajectoryStep<CandidateSet> st;
    st.fingerprint = fingerprint(legal);
    st.action = a;
    st.target_logp = logp[a];
    st.behavior_logp = q[a] == 1.0 ? 0.0 : logp[a] - log_z;
    StepResult r = env.step(s, legal, a);
    st.decision = std::move(legal);
    t.steps.push_back(std::move(st));
    if (r.done) {
      t.outcome = r.outcome;
      t.ret = r.reward;
      break;
    }
    s = std::move(r.next);
  }
  return t;
}

void PPOConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw std::invalid_argument("ppo clip must lie in (0, 1)");
  if (entropy_coef < 0.0 || critic_coef < 0.0) throw std::invalid_argument("ppo coefficients must be non-negative");
  if (epochs < 1 || minibatch < 1 || rollouts < 1) throw std::invalid_argument("ppo counts must be positive");
}

namespace {

double entropy_of(std::span<const double> probs, std::span<const double> logp) {
  double h = 0;
  for (std::size_t k = 0; k < probs.size(); ++k)
    if (probs[k] > 0.0) h -= probs[k] * logp[k];
  return h;
}

struct Sample {
  const TrajectoryStep<CandidateSet>* step;
  double ret;
  double advantage;
};

}  // namespace

double mean_entropy(std::span<const LogicTrajectory> batch, const Scorer& policy) {
  double h = 0;
  std::size_t n = 0;
  for (const auto& t : batch)
    for (const auto& st : t.steps) {
      if (st.decision.forced) continue;
      TransitionDistribution d = policy.transition_distribution(st.decision);
      h += entropy_of(d.probs, d.log_probs);
      ++n;
    }
  return n ? h / static_cast<double>(n) : 0.0;
}

UpdateStats ppo_update(std::span<const LogicTrajectory> batch, ScorerParams& policy_params,
                       ScorerParams& critic_params, const FeatureStore* store, Optimizer& policy_opt,
                       Optimizer& critic_opt, const PPOConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("ppo: empty batch");
  Scorer policy(policy_params, store);
  Scorer critic(critic_params, store);

  UpdateStats st;
  st.episodes = batch.size();
  std::vector<Sample> samples;
  for (const auto& t : batch) {
    st.mean_return += t.ret / static_cast<double>(batch.size());
    st.success_rate += (t.outcome == Outcome::True ? 1.0 : 0.0) / static_cast<double>(batch.size());
    for (const auto& s : t.steps) samples.push_back({&s, t.ret, t.ret - critic.value(s.decision.goal)});
  }
  st.mean_weight = 1.0;
  if (samples.empty()) return st;

  if (samples.size() >= cfg.normalize_min) {
    double mean = 0, var = 0;
    for (const auto& s : samples) mean += s.advantage;
    mean /= static_cast<double>(samples.size());
    for (const auto& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
    double sd = std::sqrt(var / static_cast<double>(samples.size()));
    for (auto& s : samples) s.advantage = (s.advantage - mean) / (sd + 1e-8);
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> g_pol(policy_params.size()), g_crit(critic_params.size());
  std::size_t clipped = 0, counted = 0, critic_n = 0;
  double ent_sum = 0.0, critic_sum = 0.0, kl_sum = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_kl = 0.0;
    std::size_t epoch_n = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
      std::size_t end = std::min(order.size(), start + cfg.minibatch);
      double inv = 1.0 / static_cast<double>(end - start);
      std::fill(g_pol.begin(), g_pol.end(), 0.0);
      std::fill(g_crit.begin(), g_crit.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = samples[order[i]];
        const CandidateSet& cs = s.step->decision;
        double v = critic.value(cs.goal);
        critic_sum += (v - s.ret) * (v - s.ret);
        ++critic_n;
        // Critic loss c (V - R)^2 is descended.
        critic.backprop_value(cs.goal, inv * cfg.critic_coef * 2.0 * (v - s.ret), g_crit);
        if (cs.forced) continue;

        TransitionDistribution d = policy.transition_distribution(cs);
        const std::size_t a = s.step->action;
        double ratio = std::exp(d.log_probs[a] - s.step->behavior_logp);
        double h = entropy_of(d.probs, d.log_probs);
        ent_sum += h;
        epoch_kl += s.step->behavior_logp - d.log_probs[a];
        ++epoch_n;
        ++counted;
        const double adv = s.advantage;
        bool clip_active = (adv > 0.0 && ratio > 1.0 + cfg.clip) || (adv < 0.0 && ratio < 1.0 - cfg.clip);
        if (clip_active) ++clipped;
        // Ascent direction of surrogate + entropy bonus, as d/ds_k; negated for the minimizer.
        std::vector<double> ds(cs.size());
        for (std::size_t k = 0; k < cs.size(); ++k) {
          double surr = clip_active ? 0.0 : adv * ratio * ((k == a ? 1.0 : 0.0) - d.probs[k]);
          double ent = d.probs[k] > 0.0 ? -d.probs[k] * (d.log_probs[k] + h) : 0.0;
          ds[k] = -inv * (surr + cfg.entropy_coef * ent);
        }
        policy.backprop_scores(cs, ds, g_pol);
      }
      double gn = l2_norm(g_pol);
      if (!std::isfinite(gn) || !std::isfinite(l2_norm(g_crit))) throw NonFiniteGradient("ppo: non-finite gradient");
      st.grad_norm = gn;
      policy_opt.step(policy_params.values(), g_pol);
      critic_opt.step(critic_params.values(), g_crit);
    }
    st.epochs_run = epoch + 1;
    double kl = epoch_n ? epoch_kl / static_cast<double>(epoch_n) : 0.0;
    kl_sum = kl;
    if (cfg.kl_stop > 0.0 && kl > cfg.kl_stop) break;
  }
  st.approx_kl = kl_sum;
  st.clip_fraction = counted ? static_cast<double>(clipped) / static_cast<double>(counted) : 0.0;
  st.entropy = counted ? ent_sum / static_cast<double>(counted) : 0.0;
  st.critic_loss = critic_n ? critic_sum / static_cast<double>(critic_n) : 0.0;
  return st;
}

}  // namespace dpl
