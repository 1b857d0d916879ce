#include "dpl/tasks/addition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpl/tasks/digit_mask.hpp"

namespace dpl {

DigitPrototypes make_prototypes(std::size_t feature_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  DigitPrototypes p;
  p.means.assign(10, Vec(feature_dim));
  for (auto& m : p.means)
    for (double& v : m) v = n01(rng);
  return p;
}

std::vector<AdditionSample> generate_addition_samples(std::size_t count, int n, const DigitPrototypes& protos,
                                                      double sigma, std::mt19937_64& rng, FeatureStore& store) {
  if (n < 1 || n > 17) throw std::invalid_argument("addition length must lie in [1, 17]");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  std::uniform_int_distribution<int> digit(0, 9);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto payload = [&](int d) {
    Vec f = protos.means[static_cast<std::size_t>(d)];
    for (double& v : f) v += sigma * noise(rng);
    PayloadId id = static_cast<PayloadId>(store.size());
    store.set(id, std::move(f));
    return id;
  };
  std::vector<AdditionSample> out(count);
  for (auto& s : out) {
    std::int64_t x = 0, y = 0;
    for (int i = 0; i < n; ++i) {
      int d = digit(rng);
      s.digits_a.push_back(d);
      s.a.push_back(payload(d));
      x = 10 * x + d;
    }
    for (int i = 0; i < n; ++i) {
      int d = digit(rng);
      s.digits_b.push_back(d);
      s.b.push_back(payload(d));
      y = 10 * y + d;
    }
    s.target = x + y;
  }
  return out;
}

AdditionData generate_addition_dataset(std::size_t train_count, std::size_t test_count, int n,
                                       std::size_t feature_dim, double sigma, std::uint64_t seed) {
  AdditionData d;
  d.n = n;
  d.prototypes = make_prototypes(feature_dim, seed);
  d.store = FeatureStore(feature_dim);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  d.train = generate_addition_samples(train_count, n, d.prototypes, sigma, rng, d.store);
  d.test = generate_addition_samples(test_count, n, d.prototypes, sigma, rng, d.store);
  return d;
}

DigitClassifier::DigitClassifier(const ScorerParams& params, const FeatureStore& store) : scorer_(params, &store) {
  for (int k = 0; k < 10; ++k) options_.push_back(Term::integer(k));
}

DigitDist DigitClassifier::distribution(PayloadId p) const {
  std::vector<double> q = scorer_.choice_distribution(Term::subsymbolic(p), options_);
  DigitDist d{};
  std::copy(q.begin(), q.end(), d.begin());
  return d;
}

int DigitClassifier::predict(PayloadId p) const {
  DigitDist d = distribution(p);
  return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

void DigitClassifier::backprop_probs(PayloadId p, const DigitDist& probs, const DigitDist& dprob,
                                     std::span<double> grad) const {
  double mean = 0;
  for (int k = 0; k < 10; ++k) mean += probs[static_cast<std::size_t>(k)] * dprob[static_cast<std::size_t>(k)];
  std::vector<double> ds(10);
  for (std::size_t k = 0; k < 10; ++k) ds[k] = probs[k] * (dprob[k] - mean);
  scorer_.backprop_choice(Term::subsymbolic(p), options_, ds, grad);
}

double DigitClassifier::logprob_and_grad(PayloadId p, std::size_t digit, std::span<double> grad, double scale) const {
  std::vector<double> s = scorer_.choice_scores(Term::subsymbolic(p), options_);
  std::vector<double> q = softmax(s);
  if (scale != 0.0) {
    std::vector<double> ds(10);
    for (std::size_t k = 0; k < 10; ++k) ds[k] = scale * ((k == digit ? 1.0 : 0.0) - q[k]);
    scorer_.backprop_choice(Term::subsymbolic(p), options_, ds, grad);
  }
  double m = *std::max_element(s.begin(), s.end()), z = 0;
  for (double v : s) z += std::exp(v - m);
  return s[digit] - m - std::log(z);
}

ScorerParams make_addition_params(const ScorerConfig& cfg, std::size_t feature_dim, std::uint64_t seed) {
  ScorerConfig c = cfg;
  c.feature_dim = feature_dim;
  if (c.k_int < 10) c.k_int = 10;
  std::mt19937_64 rng(seed);
  return ScorerParams::random(c, SymbolTable().size(), 0, rng);
}

namespace {

constexpr double kPClamp = 1e-12;

// Adds d loss / d params for one sample; returns (loss, p).
std::pair<double, double> sample_loss(const AdditionSample& s, const DigitClassifier& clf, const std::string& objective,
                                      double scale, std::span<double> grad) {
  const std::size_t n = s.a.size();
  std::vector<DigitDist> pa(n), pb(n), da, db;
  for (std::size_t i = 0; i < n; ++i) {
    pa[i] = clf.distribution(s.a[i]);
    pb[i] = clf.distribution(s.b[i]);
  }
  double p = mnist_sum_probability_grad(pa, pb, s.target, da, db);
  double loss, dl_dp;
  if (objective == "log") {
    double pc = std::clamp(p, kPClamp, 1.0);
    loss = -std::log(pc);
    dl_dp = -1.0 / pc;
  } else if (objective == "linear") {
    loss = -p;
    dl_dp = -1.0;
  } else {
    throw std::invalid_argument("unknown objective '" + objective + "'");
  }
  for (std::size_t i = 0; i < n; ++i) {
    DigitDist ga{}, gb{};
    for (std::size_t k = 0; k < 10; ++k) {
      ga[k] = scale * dl_dp * da[i][k];
      gb[k] = scale * dl_dp * db[i][k];
    }
    clf.backprop_probs(s.a[i], pa[i], ga, grad);
    clf.backprop_probs(s.b[i], pb[i], gb, grad);
  }
  return {loss, p};
}

}  // namespace

double addition_dp_loss_and_grad(std::span<const AdditionSample> data, const FeatureStore& store,
                                 const ScorerParams& params, const std::string& objective, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  DigitClassifier clf(params, store);
  double loss = 0;
  const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(1, data.size()));
  for (const auto& s : data) loss += inv * sample_loss(s, clf, objective, inv, grad).first;
  return loss;
}

AdditionEpochStats addition_dp_epoch(std::span<const AdditionSample> data, const FeatureStore& store,
                                     ScorerParams& params, Optimizer& opt, std::size_t batch_size,
                                     const std::string& objective, std::mt19937_64& rng) {
  if (batch_size == 0) batch_size = data.size();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  DigitClassifier clf(params, store);
  std::vector<double> grad(params.size());
  AdditionEpochStats st;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::size_t end = std::min(order.size(), start + batch_size);
    std::fill(grad.begin(), grad.end(), 0.0);
    const double inv = 1.0 / static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      auto [loss, p] = sample_loss(data[order[i]], clf, objective, inv, grad);
      st.loss += loss / static_cast<double>(data.size());
      st.mean_p += p / static_cast<double>(data.size());
    }
    if (!std::isfinite(l2_norm(grad))) throw NonFiniteGradient("addition: non-finite gradient");
    opt.step(params.values(), grad);
    ++st.updates;
  }
  return st;
}

DigitTrajectory sample_masked_addition(const AdditionSample& s, const DigitClassifier& policy, std::mt19937_64& rng) {
  const int n = static_cast<int>(s.a.size());
  DigitTrajectory t;
  int column = initial_sum_digit(s.target, n);
  auto draw = [&](PayloadId p, const DigitMask& mask) {
    DigitDist d = policy.distribution(p);
    std::vector<double> q(10, 0.0);
    double z = 0;
    for (std::size_t k = 0; k < 10; ++k)
      if (mask[k]) z += q[k] = d[k];
    if (z <= 0.0) {
      // Underflow: fall back to uniform over the allowed digits.
      for (std::size_t k = 0; k < 10; ++k) q[k] = mask[k] ? 1.0 : 0.0;
      z = std::accumulate(q.begin(), q.end(), 0.0);
      if (z == 0.0) {
        t.mask_exhausted = true;
        return -1;
      }
    }
    for (double& v : q) v /= z;
    std::size_t k = sample_index(q, rng);
    TrajectoryStep<PayloadId> st;
    st.decision = p;
    st.fingerprint = static_cast<std::uint64_t>(p);
    st.action = k;
    st.target_logp = std::log(d[k]);
    st.behavior_logp = std::log(q[k]);
    t.steps.push_back(st);
    return static_cast<int>(k);
  };
  for (int pos = 0; pos < n; ++pos) {
    int a = draw(s.a[static_cast<std::size_t>(pos)], digit_mask(pos, n, column, s.target, 0, 0));
    if (a < 0) break;
    int b = draw(s.b[static_cast<std::size_t>(pos)], digit_mask(pos, n, column, s.target, 1, a));
    if (b < 0) break;
    if (pos + 1 < n) column = next_sum_digit(column, a, b, pos, n, s.target);
  }
  if (t.mask_exhausted) {
    t.outcome = Outcome::False;
    t.ret = 0.0;
  } else {
    t.outcome = Outcome::True;
    t.ret = 1.0;
  }
  return t;
}

namespace {

std::int64_t decoded_sum(const DigitTrajectory& t) {
  std::int64_t x = 0, y = 0;
  for (std::size_t i = 0; i + 1 < t.steps.size(); i += 2) {
    x = 10 * x + static_cast<std::int64_t>(t.steps[i].action);
    y = 10 * y + static_cast<std::int64_t>(t.steps[i + 1].action);
  }
  return x + y;
}

}  // namespace

AdditionPGStats addition_pg_iteration(std::span<const AdditionSample> batch, const FeatureStore& store,
                                      ScorerParams& params, Optimizer& opt, int rollouts, double w_max,
                                      std::mt19937_64& rng) {
  DigitClassifier clf(params, store);
  std::vector<DigitTrajectory> trajs;
  AdditionPGStats st;
  for (const auto& s : batch)
    for (int r = 0; r < rollouts; ++r) {
      trajs.push_back(sample_masked_addition(s, clf, rng));
      const auto& t = trajs.back();
      if (t.mask_exhausted || t.steps.size() != 2 * s.a.size() || decoded_sum(t) != s.target)
        st.all_rollouts_valid = false;
    }
  std::vector<double> grad(params.size());
  UpdateStats u = reinforce_gradient<PayloadId>(trajs, clf, grad, w_max);
  for (double& g : grad) g = -g;
  opt.step(params.values(), grad);
  st.mean_weight = u.mean_weight;
  st.grad_norm = u.grad_norm;
  return st;
}

AdditionEval evaluate_addition(std::span<const AdditionSample> data, const FeatureStore& store,
                               const ScorerParams& params) {
  DigitClassifier clf(params, store);
  AdditionEval ev;
  ev.count = data.size();
  std::size_t digits = 0, digit_hits = 0, hits = 0;
  for (const auto& s : data) {
    std::vector<DigitDist> pa, pb;
    for (std::size_t i = 0; i < s.a.size(); ++i) {
      pa.push_back(clf.distribution(s.a[i]));
      pb.push_back(clf.distribution(s.b[i]));
      for (auto [dist, truth] : {std::pair{&pa.back(), s.digits_a[i]}, std::pair{&pb.back(), s.digits_b[i]}}) {
        ++digits;
        digit_hits += (std::max_element(dist->begin(), dist->end()) - dist->begin()) == truth;
      }
    }
    std::vector<double> sums = sum_distribution(pa, pb);
    std::int64_t best = std::max_element(sums.begin(), sums.end()) - sums.begin();
    hits += best == s.target;
  }
  if (ev.count) ev.sum_accuracy = static_cast<double>(hits) / static_cast<double>(ev.count);
  if (digits) ev.digit_accuracy = static_cast<double>(digit_hits) / static_cast<double>(digits);
  return ev;
}

}  // namespace dpl
