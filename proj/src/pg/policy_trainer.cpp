#include "dpl/pg/policy_trainer.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "dpl/mdp/env.hpp"
#include "dpl/scorer/params.hpp"

namespace dpl {

PolicyTrainer::PolicyTrainer(const Program& program, std::vector<LabeledQuery> queries, ScorerParams& policy,
                             ScorerParams& critic, PolicyTrainConfig cfg, OptionsFn options)
    : program_(program),
      queries_(std::move(queries)),
      policy_(policy),
      critic_(critic),
      cfg_(std::move(cfg)),
      options_(std::move(options)),
      policy_opt_(cfg_.algo == "ppo" ? cfg_.ppo.optimizer : cfg_.reinforce.optimizer, policy.size()),
      critic_opt_(cfg_.ppo.optimizer, critic.size()),
      rng_(cfg_.seed) {
  if (queries_.empty()) throw std::invalid_argument("no training queries");
  if (cfg_.algo != "ppo" && cfg_.algo != "reinforce") throw std::invalid_argument("algo must be ppo or reinforce");
  if (cfg_.queries_per_iter == 0) throw std::invalid_argument("queries_per_iter must be positive");
  if (cfg_.algo == "ppo") cfg_.ppo.validate();
  order_.resize(queries_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), rng_);
}

DerivationOptions PolicyTrainer::options_for(const LabeledQuery& q) const {
  return options_ ? options_(q) : cfg_.derivation;
}

PolicyIterationLog PolicyTrainer::iterate() {
  Scorer policy(policy_, nullptr);
  std::vector<LogicTrajectory> batch;
  PolicyIterationLog log;
  std::size_t n_pos = 0, n_neg = 0;
  const int rollouts = cfg_.algo == "ppo" ? cfg_.ppo.rollouts : 1;
  for (std::size_t q = 0; q < cfg_.queries_per_iter; ++q) {
    if (cursor_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    const std::size_t idx = order_[cursor_++];
    const LabeledQuery& lq = queries_[idx];
    ProofEnv env(program_, options_for(lq));
    for (int r = 0; r < rollouts; ++r) {
      batch.push_back(sample_episode(env, policy, lq.goal, lq.label, static_cast<int>(idx), rng_));
      (lq.label ? log.mean_return_pos : log.mean_return_neg) += batch.back().ret;
      (lq.label ? n_pos : n_neg) += 1;
    }
  }
  if (n_pos) log.mean_return_pos /= static_cast<double>(n_pos);
  if (n_neg) log.mean_return_neg /= static_cast<double>(n_neg);
  if (cfg_.algo == "ppo") {
    log.stats = ppo_update(batch, policy_, critic_, nullptr, policy_opt_, critic_opt_, cfg_.ppo, rng_);
  } else {
    log.stats = reinforce_update<CandidateSet>(batch, policy, policy_.values(), policy_opt_, cfg_.reinforce, &baseline_);
  }
  log.iteration = ++iteration_;
  return log;
}

void PolicyTrainer::save_state(std::ostream& os) const {
  os << "iteration " << iteration_ << '\n';
  os << "cursor " << cursor_ << '\n';
  os << "baseline " << format_double(baseline_) << '\n';
  os << "order " << order_.size();
  for (std::size_t i : order_) os << ' ' << i;
  os << '\n' << "rng " << rng_ << '\n';
  policy_opt_.save_state(os);
  critic_opt_.save_state(os);
}

void PolicyTrainer::load_state(std::istream& is) {
  auto expect = [&](const char* tag) {
    std::string t;
    if (!(is >> t) || t != tag) throw std::runtime_error(std::string("trainer state: expected '") + tag + "'");
  };
  std::string b;
  std::size_t n = 0;
  expect("iteration");
  is >> iteration_;
  expect("cursor");
  is >> cursor_;
  expect("baseline");
  is >> b;
  expect("order");
  is >> n;
  if (!is || n != order_.size()) throw std::runtime_error("trainer state does not match the query set");
  for (auto& i : order_) is >> i;
  expect("rng");
  is >> rng_;
  if (!is || cursor_ > order_.size()) throw std::runtime_error("malformed trainer state");
  baseline_ = std::stod(b);
  policy_opt_.load_state(is);
  critic_opt_.load_state(is);
}

}  // namespace dpl
