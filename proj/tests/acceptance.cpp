// Acceptance run: one PASS/FAIL line per criterion with the measured values,
// the pinned tolerance and the wall-clock limit. Exit status is nonzero if
// any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpl/cli/run.hpp"
#include "dpl/dp/carry.hpp"
#include "dpl/dp/solver.hpp"
#include "dpl/logic/parser.hpp"
#include "dpl/mdp/env.hpp"
#include "dpl/pg/trainer.hpp"
#include "dpl/scorer/universal.hpp"
#include "dpl/sld/resolution.hpp"
#include "dpl/tasks/addition.hpp"
#include "dpl/tasks/kg.hpp"
#include "dpl/tasks/mask_oracle.hpp"
#include "support.hpp"

using namespace dpl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ScorerParams random_params(const Program& p, std::uint64_t seed, std::size_t dim, double std = 0.5) {
  ScorerConfig cfg;
  cfg.dim = dim;
  cfg.init_std = std;
  std::mt19937_64 rng(seed);
  return ScorerParams::random(cfg, p.symbols().size(), p.signature().max_arity(), rng);
}

cli::RunConfig load_config(const std::string& name, const std::string& out_dir) {
  cli::RunConfig c = cli::RunConfig::from_file(std::string(DPL_SOURCE_DIR) + "/configs/" + name);
  c.override_with("out_dir=" + (fs::path(DPL_ACCEPT_DIR) / out_dir).string());
  return c;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t data_rows(const fs::path& tsv) {
  std::ifstream in(tsv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n == 0 ? 0 : n - 1;
}

cli::Report train(const cli::RunConfig& c, bool pg) {
  fs::remove_all(c.str("out_dir"));
  std::ostringstream sink;
  return cli::cmd_train(c, pg, sink);
}

double metric(const cli::Report& r, const std::string& k) { return std::stod(r.at(k)); }

// 1. DP value against brute-force enumeration on random programs.
Verdict oracle_equivalence() {
  std::mt19937_64 rng(1001);
  int checked = 0, cyclic = 0;
  double worst = 0;
  std::size_t max_goals = 0;
  for (int trial = 0; checked < 40 && trial < 1000; ++trial) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.text);
    Goal q = parse_query(rp.query, p);
    ScorerParams prm = random_params(p, rng(), 4);
    Scorer sc(prm);
    DPOptions opts;
    opts.derivation.max_depth = 6;
    opts.derivation.memory = trial % 2 == 0;
    DPSolver s(p, sc, opts);
    double dp = s.solve(q);
    if (s.explored_goals() > 50) continue;
    DerivationOptions bo = opts.derivation;
    bo.max_derivations = 200000;
    double brute = 0;
    try {
      brute = success_probability_bruteforce(q, p, sc, bo);
    } catch (const ResourceLimit&) {
      continue;
    }
    worst = std::max(worst, std::abs(dp - brute));
    max_goals = std::max(max_goals, s.explored_goals());
    cyclic += s.cyclic();
    ++checked;
  }
  return {checked >= 20 && worst <= 1e-12,
          std::to_string(checked) + " programs (" + std::to_string(cyclic) + " cyclic, <= " +
              std::to_string(max_goals) + " goals), max |dp - brute| = " + fmt("%.3g", worst) + " (tol 1e-12)"};
}

// 2. Analytic gradients against central differences.
Verdict gradient_correctness() {
  std::mt19937_64 rng(2002);
  int instances = 0;
  std::size_t coords = 0;
  double worst = 0;
  for (int trial = 0; instances < 10 && trial < 500; ++trial) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.text);
    Goal q = parse_query(rp.query, p);
    ScorerParams prm = random_params(p, rng(), 3);
    Scorer sc(prm);
    DPOptions opts;
    opts.derivation.max_depth = 5;
    opts.derivation.memory = trial % 2 == 1;
    DPSolver s(p, sc, opts);
    double v = s.solve(q);
    if (s.explored_goals() > 50 || v <= 1e-4 || v >= 1 - 1e-4) continue;
    CandidateSet cs = candidate_next_goals(q, p, opts.derivation.resolution);
    if (cs.size() < 2) continue;

    std::vector<LabeledQuery> data{{q, static_cast<int>(rng() % 2), 0}};
    for (const char* objective : {"linear", "log"}) {
      Vec g(prm.size());
      dp_loss_and_grad(data, p, prm, nullptr, opts, objective, g);
      Vec n = testing::numeric_gradient(prm.values(), [&] {
        Vec tmp(prm.size());
        return dp_loss_and_grad(data, p, prm, nullptr, opts, objective, tmp).loss;
      });
      worst = std::max(worst, testing::gradient_mismatch(g, n));
      coords += g.size();
    }
    for (std::size_t k = 0; k < cs.size(); ++k) {
      auto [lp, g] = sc.logprob_and_grad(cs, k);
      Vec n = testing::numeric_gradient(prm.values(), [&] { return std::log(sc.distribution(cs)[k]); });
      worst = std::max(worst, testing::gradient_mismatch(g, n));
      coords += g.size();
    }
    ++instances;
  }
  return {instances == 10 && worst <= 1.0,
          std::to_string(instances) + " instances, " + std::to_string(coords) +
              " coordinates of dL (linear, log) and dlog p; worst error / (1e-4 rel + 1e-9 abs) = " +
              fmt("%.3g", worst)};
}

// 3. Constructive embeddings reproduce Dirichlet edge distributions.
Verdict universal_approximation() {
  std::mt19937_64 rng(3003);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  double worst = 0;
  std::size_t edges = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    TargetTree t;
    t.parent = {-1};
    for (int i = 1; i < n; ++i) t.parent.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(i)));
    t.edge_prob.assign(static_cast<std::size_t>(n), 1.0);
    for (int v = 0; v < n; ++v) {
      auto ch = t.children(v);
      double z = 0;
      for (int c : ch) z += (t.edge_prob[static_cast<std::size_t>(c)] = gamma(rng) + 1e-12);
      for (int c : ch) t.edge_prob[static_cast<std::size_t>(c)] /= z;
    }
    auto emb = construct_universal_embeddings(t, static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      auto ch = t.children(v);
      auto got = induced_child_probs(t, emb, v);
      for (std::size_t k = 0; k < ch.size(); ++k) {
        worst = std::max(worst, std::abs(got[k] - t.edge_prob[static_cast<std::size_t>(ch[k])]));
        ++edges;
      }
    }
  }
  return {worst <= 1e-9, "50 trees (2..20 nodes), " + std::to_string(edges) + " edges, max abs error " +
                             fmt("%.3g", worst) + " (tol 1e-9)"};
}

// 4. J = -L per batch, and gradient coefficient signs agree.
Verdict objective_duality() {
  std::mt19937_64 rng(4004);
  int batches = 0, exact = 0;
  for (int trial = 0; batches < 20 && trial < 500; ++trial) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.text);
    Goal q = parse_query(rp.query, p);
    ScorerParams prm = random_params(p, rng(), 4);
    Scorer sc(prm);
    DPOptions opts;
    opts.derivation.max_depth = 6;
    DPSolver s(p, sc, opts);
    s.solve(q);
    if (s.explored_goals() > 50) continue;
    std::vector<LabeledQuery> batch;
    for (int i = 0; i < 4; ++i) batch.push_back({q, static_cast<int>(rng() % 2), i});
    Vec g(prm.size());
    EpochStats st = dp_loss_and_grad(batch, p, prm, nullptr, opts, "linear", g);
    double j = 0;
    for (const auto& lq : batch) j += (2.0 * lq.label - 1.0) * success_probability_dp(lq.goal, p, sc, opts);
    exact += j == -st.loss && st.objective_j == -st.loss;
    ++batches;
  }
  int signs = 0;
  for (int i = 1; i <= 9; ++i)
    for (int y : {0, 1}) {
      double p = i / 10.0;
      double linear = 2.0 * y - 1.0, xent = (y - p) / (p * (1 - p));
      signs += (linear > 0) == (xent > 0);
    }
  return {batches == 20 && exact == batches && signs == 18,
          std::to_string(exact) + "/" + std::to_string(batches) + " batches with J == -L exactly, sign test " +
              std::to_string(signs) + "/18"};
}

// 5. Episode returns, goal repeats and label isolation.
Verdict mdp_semantics() {
  std::mt19937_64 rng(5005);
  long episodes = 0, bad_return = 0, repeats = 0, leaks = 0;
  while (episodes < 10000) {
    auto rp = testing::random_program(rng);
    Program p = parse_program(rp.text);
    Goal q = parse_query(rp.query, p);
    ScorerParams prm = random_params(p, rng(), 4);
    Scorer sc(prm);
    DerivationOptions opts;
    opts.max_depth = 8;
    ProofEnv env(p, opts);
    for (int rep = 0; rep < 50 && episodes < 10000; ++rep, ++episodes) {
      int y = static_cast<int>(rng() % 2);
      EnvState s = env.reset(q, y), twin = env.reset(q, 1 - y);
      std::vector<Goal> seen{q};
      double ret = 0;
      while (true) {
        CandidateSet legal = env.legal_actions(s), other = env.legal_actions(twin);
        bool same = legal.size() == other.size();
        for (std::size_t k = 0; same && k < legal.size(); ++k) same = legal.next_goal(k) == other.next_goal(k);
        if (same && !legal.empty()) same = sc.distribution(legal) == sc.distribution(other);
        leaks += !same;
        if (!same || legal.empty()) break;
        std::vector<double> probs = sc.distribution(legal);
        std::size_t a = sample_index(probs, rng);
        StepResult r = env.step(s, legal, a);
        StepResult rt = env.step(twin, other, a);
        leaks += rt.reward != -r.reward;
        ret += r.reward;
        bool law = r.outcome == dpl::Outcome::True ? r.reward == 2.0 * y - 1.0 : r.reward == 0.0;
        bad_return += !law;
        if (r.done) break;
        repeats += std::find(seen.begin(), seen.end(), r.next.goal) != seen.end();
        seen.push_back(r.next.goal);
        s = r.next;
        twin = rt.next;
      }
      bad_return += !(ret == -1.0 || ret == 0.0 || ret == 1.0);
    }
  }
  return {bad_return == 0 && repeats == 0 && leaks == 0,
          std::to_string(episodes) + " episodes: " + std::to_string(bad_return) + " reward-law violations, " +
              std::to_string(repeats) + " repeated goals, " + std::to_string(leaks) + " label-flip differences"};
}

DigitDist random_dist(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.7, 1.0);
  DigitDist d{};
  double z = 0;
  for (double& v : d) z += (v = g(rng) + 1e-9);
  for (double& v : d) v /= z;
  return d;
}

double brute_sum(const std::vector<DigitDist>& a, const std::vector<DigitDist>& b, std::int64_t target) {
  const int n = static_cast<int>(a.size());
  const std::int64_t lim = pow10(n);
  double total = 0;
  for (std::int64_t x = std::max<std::int64_t>(0, target - lim + 1); x < lim && x <= target; ++x) {
    std::int64_t y = target - x;
    double p = 1;
    for (int i = 0; i < n; ++i) {
      std::int64_t place = pow10(n - 1 - i);
      p *= a[static_cast<std::size_t>(i)][static_cast<std::size_t>((x / place) % 10)] *
           b[static_cast<std::size_t>(i)][static_cast<std::size_t>((y / place) % 10)];
    }
    total += p;
  }
  return total;
}

// 6. Carry DP against enumeration.
Verdict carry_dp() {
  std::mt19937_64 rng(6006);
  double worst = 0, worst_mass = 0;
  int pairs = 0;
  for (int n : {1, 2})
    for (int trial = 0; trial < 100; ++trial, ++pairs) {
      std::vector<DigitDist> a, b;
      for (int i = 0; i < n; ++i) {
        a.push_back(random_dist(rng));
        b.push_back(random_dist(rng));
      }
      double total = 0;
      for (std::int64_t t = 0; t <= 2 * pow10(n) - 2; ++t) {
        double p = mnist_sum_probability(a, b, t);
        worst = std::max(worst, std::abs(p - brute_sum(a, b, t)));
        total += p;
      }
      worst_mass = std::max(worst_mass, std::abs(total - 1.0));
    }
  return {worst <= 1e-12 && worst_mass <= 1e-9,
          std::to_string(pairs) + " pairs (100 each for N = 1, 2): max |dp - enum| = " + fmt("%.3g", worst) +
              " (tol 1e-12), max |sum - 1| = " + fmt("%.3g", worst_mass) + " (tol 1e-9)"};
}

// 7. Digit mask against the brute-force completion oracle.
Verdict digit_mask_check() {
  std::size_t checked = 0, bad = 0, states = 0;
  for (int n = 1; n <= 3; ++n) {
    std::size_t c = 0;
    bad += exhaustive_mask_mismatches(n, &c);
    checked += c;
    CompletionCheck cc = completion_check(n);
    bad += cc.mismatches;
    states += cc.states;
  }
  return {bad == 0, std::to_string(checked) + " mask entries and " + std::to_string(states) +
                        " reachable rollout states for N = 1..3, " + std::to_string(bad) + " mismatches"};
}

// Nearest-class-mean (a linear rule) digit accuracy on every payload.
double prototype_separability(const cli::RunConfig& c) {
  AdditionData d = generate_addition_dataset(c.count("addition.train"), c.count("addition.test"),
                                             static_cast<int>(c.integer("addition.n")), c.count("addition.feature_dim"),
                                             c.real("addition.sigma"), static_cast<std::uint64_t>(c.integer("data_seed")));
  std::size_t right = 0, total = 0;
  auto check = [&](PayloadId id, int digit) {
    const Vec& x = d.store.get(id);
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < 10; ++k) {
      double dist = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double e = x[i] - d.prototypes.means[static_cast<std::size_t>(k)][i];
        dist += e * e;
      }
      if (dist < best_d) best_d = dist, best = k;
    }
    right += best == digit;
    ++total;
  };
  for (const auto* split : {&d.train, &d.test})
    for (const auto& s : *split)
      for (std::size_t i = 0; i < s.a.size(); ++i) {
        check(s.a[i], s.digits_a[i]);
        check(s.b[i], s.digits_b[i]);
      }
  return static_cast<double>(right) / static_cast<double>(total);
}

std::size_t warmup_epochs(const cli::RunConfig& c) {
  return c.count("restarts") > 1 ? c.count("restarts") * c.count("restart_epochs") : 0;
}

// 8. Exact-mode addition training.
Verdict addition_dp() {
  cli::RunConfig c = load_config("addition_dp.cfg", "c8_a");
  double sep = prototype_separability(c);
  cli::Report r = train(c, false);
  double acc = metric(r, "sum_accuracy");
  std::size_t epochs = c.count("epochs") + warmup_epochs(c);
  return {sep >= 0.99 && acc >= 0.90 && epochs <= 200,
          "N=2, 2000 train, sigma " + c.str("addition.sigma") + ": nearest-mean digit separability " +
              fmt("%.4f", sep) + " (>= 0.99), test sum accuracy " + r.at("sum_accuracy") + " (>= 0.90), " +
              std::to_string(epochs) + " epochs incl. warm-ups (<= 200)"};
}

// 9. Masked off-policy REINFORCE on the same data.
Verdict addition_pg() {
  cli::RunConfig c = load_config("addition_pg.cfg", "c9");
  cli::Report r = train(c, true);
  double acc = metric(r, "sum_accuracy");
  std::size_t iters = data_rows(fs::path(c.str("out_dir")) / "train_log.tsv") +
                      warmup_epochs(c) * c.count("pg.iters_per_epoch");
  bool valid = r.at("rollouts_valid") == "1";
  return {acc >= 0.80 && iters <= 1000 && valid,
          "test sum accuracy " + r.at("sum_accuracy") + " (>= 0.80), " + std::to_string(iters) +
              " iterations incl. warm-ups (<= 1000), all masked rollouts hit the target: " + (valid ? "yes" : "no")};
}

// 10. Monte-Carlo REINFORCE gradient against the DP gradient.
Verdict reinforce_unbiased() {
  Program p = parse_program("p(X) :- q(X). p(X) :- r(X). q(a). r(X) :- q(X). r(X) :- s(X). s(a).");
  ScorerParams prm = random_params(p, 11, 2);
  Scorer sc(prm);
  DPOptions dp;
  dp.derivation.max_depth = 6;
  Goal q = parse_query("p(a)", p);
  DPSolver solver(p, sc, dp);
  solver.solve(q);
  Vec exact(prm.size(), 0.0);
  solver.backprop(1.0, exact);

  ProofEnv env(p, dp.derivation);
  std::mt19937_64 rng(10010);
  const int n = 100000;
  Vec sum(prm.size(), 0.0), sumsq(prm.size(), 0.0), g(prm.size());
  for (int i = 0; i < n; ++i) {
    LogicTrajectory t = sample_episode(env, sc, q, 1, i, rng);
    std::fill(g.begin(), g.end(), 0.0);
    accumulate_score_function(t, sc, t.ret, std::span<double>(g));
    for (std::size_t j = 0; j < g.size(); ++j) {
      sum[j] += g[j];
      sumsq[j] += g[j] * g[j];
    }
  }
  double worst = 0;
  std::size_t outside = 0;
  for (std::size_t j = 0; j < prm.size(); ++j) {
    double mean = sum[j] / n;
    double se = std::sqrt(std::max(0.0, sumsq[j] / n - mean * mean) / n);
    outside += std::abs(mean - exact[j]) > 3 * se + 1e-12;
    if (se > 0) worst = std::max(worst, std::abs(mean - exact[j]) / se);
  }
  return {solver.explored_goals() == 6 && outside == 0,
          std::to_string(solver.explored_goals()) + "-goal program, 100000 episodes, " + std::to_string(prm.size()) +
              " components, " + std::to_string(outside) + " outside 3 SE, largest |z| " + fmt("%.2f", worst)};
}

// 11. PPO on the generated kinship graph.
Verdict kinship_ppo(cli::Report& out, const std::string& dir) {
  cli::RunConfig c = load_config("kinship_ppo.cfg", dir);
  out = train(c, true);
  const fs::path data = fs::path(c.str("out_dir")) / "data";
  KGDataset kg = load_kg((data / "train.tsv").string(), (data / "valid.tsv").string(), (data / "test.tsv").string(),
                         (data / "rules.dpl").string());
  double uniform = 0;
  const std::size_t candidates = c.count("kg.negatives") + 1;
  for (std::size_t k = 1; k <= candidates; ++k) uniform += 1.0 / static_cast<double>(k);
  uniform /= static_cast<double>(candidates);
  double mrr = metric(out, "mrr");
  bool proofs = out.at("proofs_expected") == out.at("proofs_replayed");
  return {mrr >= 0.35 && mrr >= 2 * uniform && proofs,
          std::to_string(kg.entities.size()) + " entities, " + std::to_string(kg.test.size()) + " test queries x " +
              c.str("kg.negatives") + " negatives: MRR " + fmt("%.4f", mrr) + " (>= 0.35; uniform " +
              fmt("%.4f", uniform) + "), proofs replayed " + out.at("proofs_replayed") + "/" +
              out.at("proofs_expected")};
}

// 12. Same seed, separate output directories, identical reports.
Verdict determinism() {
  cli::RunConfig a = load_config("addition_dp.cfg", "c12_a");
  train(a, false);
  cli::RunConfig b = load_config("addition_dp.cfg", "c12_b");
  train(b, false);
  cli::Report ka, kb;
  kinship_ppo(ka, "c12_kin_a");
  kinship_ppo(kb, "c12_kin_b");
  auto same = [](const std::string& x, const std::string& y, const std::string& file) {
    std::string tx = read_text(fs::path(x) / file), ty = read_text(fs::path(y) / file);
    return !tx.empty() && tx == ty;
  };
  const std::string ka_dir = (fs::path(DPL_ACCEPT_DIR) / "c12_kin_a").string();
  const std::string kb_dir = (fs::path(DPL_ACCEPT_DIR) / "c12_kin_b").string();
  bool add_metrics = same(a.str("out_dir"), b.str("out_dir"), "metrics.txt");
  bool add_log = same(a.str("out_dir"), b.str("out_dir"), "train_log.tsv");
  bool kin_metrics = same(ka_dir, kb_dir, "metrics.txt");
  bool kin_log = same(ka_dir, kb_dir, "train_log.tsv");
  auto yn = [](bool v) { return std::string(v ? "identical" : "DIFFERENT"); };
  return {add_metrics && add_log && kin_metrics && kin_log,
          "addition metrics.txt " + yn(add_metrics) + ", train_log.tsv " + yn(add_log) + "; kinship metrics.txt " +
              yn(kin_metrics) + ", train_log.tsv " + yn(kin_log)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  fs::create_directories(DPL_ACCEPT_DIR);
  struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<Verdict()> run;
  };
  cli::Report kin;
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", 10, oracle_equivalence},
      {2, "gradient correctness", 30, gradient_correctness},
      {3, "universal approximation", 5, universal_approximation},
      {4, "objective duality", 1, objective_duality},
      {5, "MDP semantics", 30, mdp_semantics},
      {6, "carry DP", 10, carry_dp},
      {7, "digit mask", 30, digit_mask_check},
      {8, "addition, exact mode", 600, addition_dp},
      {9, "addition, PG mode", 1200, addition_pg},
      {10, "REINFORCE unbiasedness", 0, reinforce_unbiased},
      {11, "kinship KG completion", 1800, [&] { return kinship_ppo(kin, "c11"); }},
      {12, "determinism", 0, determinism},
  };
  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    auto t0 = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = c.limit_s <= 0 || secs < c.limit_s;
    bool pass = o.pass && in_time;
    failed += !pass;
    std::string timing = fmt("%.2f s", secs);
    if (c.limit_s > 0) timing += fmt(" (limit %.0f s)", c.limit_s);
    std::cout << "C" << c.id << (c.id < 10 ? "  " : " ") << (pass ? "PASS" : "FAIL") << "  " << c.name << ": "
              << o.detail << "; " << timing << std::endl;
  }
  std::cout << (failed == 0 ? "all " + std::to_string(ran) + " criteria pass" : std::to_string(failed) + " criteria fail")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
