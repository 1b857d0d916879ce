#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dpl/logic/parser.hpp"
#include "dpl/tasks/addition.hpp"
#include "dpl/tasks/digit_mask.hpp"
#include "dpl/tasks/kg.hpp"
#include "dpl/tasks/kg_train.hpp"
#include "dpl/tasks/proof.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dpl;

namespace {

DigitMask mask_of(std::initializer_list<int> allowed) {
  DigitMask m{};
  for (int d : allowed) m[static_cast<std::size_t>(d)] = true;
  return m;
}

std::int64_t decode(const std::vector<int>& digits) {
  std::int64_t v = 0;
  for (int d : digits) v = 10 * v + d;
  return v;
}

const char* kUncleRules =
    "uncle(X, Y) :- brother(Z, Y), uncle(X, Z).\n"
    "uncle(X, Y) :- sister(Z, Y), uncle(X, Z).\n";

}  // namespace

TEST_CASE("digit_mask: examples and domain errors") {
  CHECK(digit_mask(1, 2, 5, 15, 0, 0) == mask_of({0, 1, 2, 3, 4, 5}));
  CHECK(digit_mask(0, 1, 5, 5, 0, 0) == mask_of({0, 1, 2, 3, 4, 5}));
  CHECK(digit_mask(1, 2, 7, 17, 1, 3) == mask_of({4}));
  CHECK(digit_mask(0, 1, 7, 7, 1, 3) == mask_of({4}));
  // A carry may still arrive from below: the column target 7 admits a + b = 6.
  CHECK(digit_mask(0, 2, 7, 75, 1, 3) == mask_of({3, 4}));
  CHECK(digit_mask(0, 2, 7, 79, 1, 3) == mask_of({4}));
  CHECK(max_suffix(1299, 2));
  CHECK_FALSE(max_suffix(1298, 2));
  CHECK(initial_sum_digit(150, 2) == 15);
  CHECK(next_sum_digit(15, 9, 5, 0, 2, 150) == 10);
  CHECK_THROWS_AS(digit_mask(2, 2, 5, 15, 0, 0), DomainError);
  CHECK_THROWS_AS(digit_mask(0, 2, 20, 15, 0, 0), DomainError);
  CHECK_THROWS_AS(digit_mask(0, 2, 5, 15, 2, 0), DomainError);
  CHECK_THROWS_AS(digit_mask(0, 2, 5, 15, 1, 10), DomainError);
  CHECK_THROWS_AS(digit_mask(0, 2, 5, 199, 0, 0), DomainError);
}

TEST_CASE("digit_mask equals the completion oracle for N <= 3") {
  for (int n = 1; n <= 3; ++n) {
    auto c = dpl::testing::completion_check(n);
    CHECK(c.states > 0);
    CHECK(c.mismatches == 0);
    std::size_t checked = 0;
    CHECK(dpl::testing::exhaustive_mask_mismatches(n, &checked) == 0);
    CHECK(checked > 0);
  }
}

TEST_CASE("addition dataset: sums, noise-free payloads, determinism") {
  AdditionData d = generate_addition_dataset(50, 10, 2, 8, 0.0, 3);
  for (const auto& s : d.train) {
    CHECK(s.target == decode(s.digits_a) + decode(s.digits_b));
    for (std::size_t i = 0; i < s.a.size(); ++i)
      CHECK(d.store.get(s.a[i]) == d.prototypes.means[static_cast<std::size_t>(s.digits_a[i])]);
  }
  AdditionData e = generate_addition_dataset(50, 10, 2, 8, 0.0, 3);
  AdditionData f = generate_addition_dataset(50, 10, 2, 8, 0.5, 3);
  CHECK(e.train.size() == 50);
  CHECK(e.test.size() == 10);
  for (std::size_t i = 0; i < e.train.size(); ++i) {
    CHECK(e.train[i].target == d.train[i].target);
    CHECK(e.train[i].a == d.train[i].a);
  }
  AdditionData g = generate_addition_dataset(50, 10, 2, 8, 0.5, 3);
  REQUIRE(g.store.size() == f.store.size());
  for (std::size_t q = 0; q < f.store.size(); ++q)
    CHECK(g.store.get(static_cast<PayloadId>(q)) == f.store.get(static_cast<PayloadId>(q)));
  CHECK_THROWS_AS(generate_addition_dataset(1, 1, 0, 8, 0.1, 1), std::invalid_argument);
}

TEST_CASE("addition: exact-mode gradient matches finite differences") {
  AdditionData d = generate_addition_dataset(6, 0, 2, 4, 0.3, 5);
  ScorerConfig cfg;
  cfg.dim = 3;
  cfg.init_std = 0.4;
  ScorerParams p = make_addition_params(cfg, 4, 9);
  for (const char* obj : {"linear", "log"}) {
    std::vector<double> g(p.size());
    addition_dp_loss_and_grad(d.train, d.store, p, obj, g);
    auto n = dpl::testing::numeric_gradient(p.values(), [&] {
      std::vector<double> tmp(p.size());
      return addition_dp_loss_and_grad(d.train, d.store, p, obj, tmp);
    });
    CHECK(dpl::testing::gradient_mismatch(g, n) <= 1.0);
  }
}

TEST_CASE("addition: masked rollouts always satisfy the target sum") {
  for (int n : {1, 2, 3}) {
    AdditionData d = generate_addition_dataset(40, 0, n, 6, 0.5, 11);
    ScorerConfig cfg;
    cfg.dim = 8;
    ScorerParams p = make_addition_params(cfg, 6, 2);
    DigitClassifier clf(p, d.store);
    std::mt19937_64 rng(4);
    for (const auto& s : d.train)
      for (int r = 0; r < 5; ++r) {
        DigitTrajectory t = sample_masked_addition(s, clf, rng);
        REQUIRE(t.steps.size() == 2 * static_cast<std::size_t>(n));
        std::vector<int> a, b;
        for (std::size_t i = 0; i < t.steps.size(); i += 2) {
          a.push_back(static_cast<int>(t.steps[i].action));
          b.push_back(static_cast<int>(t.steps[i + 1].action));
        }
        CHECK(decode(a) + decode(b) == s.target);
        CHECK(t.ret == 1.0);
        CHECK(importance_weight(t, 1e9) <= 1.0 + 1e-12);
      }
  }
}

TEST_CASE("addition: noise-free features make exact-mode training reach full accuracy") {
  AdditionData d = generate_addition_dataset(200, 100, 1, 8, 0.0, 13);
  ScorerConfig cfg;
  cfg.dim = 16;
  ScorerParams p = make_addition_params(cfg, 8, 1);
  Optimizer opt({.kind = "adam", .lr = 0.01}, p.size());
  std::mt19937_64 rng(1);
  for (int e = 0; e < 40; ++e) addition_dp_epoch(d.train, d.store, p, opt, 32, "log", rng);
  CHECK(evaluate_addition(d.test, d.store, p).sum_accuracy == 1.0);
}

TEST_CASE("kg: loading, validation and rule parsing") {
  std::string dir = (std::filesystem::temp_directory_path() / "dproflog_kg_test").string();
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir + "/" + name) << text;
  };
  write("train.tsv", "a\tbrother\tb\nb\tsister\tc\nd\tuncle\tc\n");
  write("valid.tsv", "");
  write("test.tsv", "d\tuncle\tb\n");
  write("rules.dpl", kUncleRules);
  KGDataset kg = load_kg(dir + "/train.tsv", dir + "/valid.tsv", dir + "/test.tsv", dir + "/rules.dpl");
  CHECK(kg.program.size() == 5);
  CHECK(kg.fact_clause.size() == 3);
  CHECK(kg.entities == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(kg.relations == std::vector<std::string>{"brother", "sister", "uncle"});
  CHECK(kg.program.clause(0).body.size() == 2);

  write("bad_test.tsv", "a\tbrother\tb\n");
  CHECK_THROWS_AS(load_kg(dir + "/train.tsv", dir + "/valid.tsv", dir + "/bad_test.tsv", dir + "/rules.dpl"),
                  DataError);
  write("malformed.tsv", "a\tbrother\tb\nx\ty\n");
  try {
    parse_triples("a\tbrother\tb\nx\ty\n", "malformed.tsv");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("malformed.tsv:2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_kg(dir + "/missing.tsv", dir + "/valid.tsv", dir + "/test.tsv", dir + "/rules.dpl"),
                  DataError);
}

TEST_CASE("kg: sample_negatives") {
  std::vector<std::string> two{"a", "b"};
  Triple q{"a", "r", "b"};
  auto one = sample_negatives(q, 1, two, CorruptMode::Tail, {}, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Triple{"a", "r", "a"});
  CHECK_THROWS_AS(sample_negatives(q, 2, two, CorruptMode::Tail, {}, 1), DataError);

  std::vector<std::string> ents;
  for (int i = 0; i < 30; ++i) ents.push_back("e" + std::to_string(i));
  std::set<Triple> known{{"e0", "r", "e1"}, {"e0", "r", "e2"}, {"e3", "r", "e1"}};
  Triple t{"e0", "r", "e1"};
  auto negs = sample_negatives(t, 20, ents, CorruptMode::Both, known, 7);
  CHECK(negs.size() == 20);
  std::set<Triple> uniq(negs.begin(), negs.end());
  CHECK(uniq.size() == 20);
  for (const auto& n : negs) {
    CHECK_FALSE(n == t);
    CHECK(known.count(n) == 0);
    CHECK(((n.head == t.head) != (n.tail == t.tail)));
  }
  CHECK(sample_negatives(t, 20, ents, CorruptMode::Both, known, 7) == negs);
}

TEST_CASE("kg: rank metrics") {
  RankMetrics one = rank_metrics({{1.0, {0.5, 0.2}}});
  CHECK(one.mrr == 1.0);
  CHECK(one.hits[1] == 1.0);
  std::vector<RankResult> rs{{1.0, {0.0}}, {1.0, {2.0}}, {1.0, {2.0, 3.0, 4.0}}};
  RankMetrics m = rank_metrics(rs);
  CHECK(m.mrr == doctest::Approx(7.0 / 12).epsilon(1e-15));
  CHECK(m.hits[1] == doctest::Approx(1.0 / 3));
  CHECK(m.hits[3] == doctest::Approx(2.0 / 3));
  CHECK(m.hits[10] == 1.0);
  // Ties rank the true answer below equal-scored corruptions.
  CHECK(RankResult{1.0, {1.0, 1.0, 0.0}}.rank() == 3);
  CHECK_THROWS_AS(rank_metrics({}), std::invalid_argument);
}

TEST_CASE("kg: uniform random ranking over 21 candidates has MRR near H_21 / 21") {
  double expected = 0;
  for (int r = 1; r <= 21; ++r) expected += 1.0 / r / 21.0;
  CHECK(expected == doctest::Approx(0.1735).epsilon(1e-3));
  const std::size_t n = 4000;
  RankMetrics m = evaluate_random_ranking(n, 20, 3);
  double var = 0;
  for (int r = 1; r <= 21; ++r) var += (1.0 / r - expected) * (1.0 / r - expected) / 21.0;
  CHECK(std::abs(m.mrr - expected) <= 3 * std::sqrt(var / n));
}

TEST_CASE("proof trees: fact proof, nested uncle proof, round trip and replay") {
  Program p = parse_program(std::string(kUncleRules) +
                            "brother(e2260, e2252).\nsister(e2262, e2260).\nuncle(e2266, e2262).\n");
  DerivationOptions opts;
  opts.max_depth = 10;

  Goal fact = parse_query("uncle(e2266, e2262)", p);
  auto fd = enumerate_derivations(fact, p, opts);
  const Derivation* fok = nullptr;
  for (const auto& d : fd)
    if (d.outcome == Outcome::True) fok = &d;
  REQUIRE(fok);
  ProofTree ft = export_proof_tree(*fok, p);
  REQUIRE(ft.roots.size() == 1);
  CHECK(ft.roots[0].children.empty());
  CHECK(ft.roots[0].clause_id == 4);

  Goal q = parse_query("uncle(e2266, e2252)", p);
  const Derivation* ok = nullptr;
  auto all = enumerate_derivations(q, p, opts);
  for (const auto& d : all)
    if (d.outcome == Outcome::True) ok = &d;
  REQUIRE(ok);
  ProofTree t = export_proof_tree(*ok, p);
  REQUIRE(t.roots.size() == 1);
  const ProofNode& root = t.roots[0];
  CHECK(root.atom == "uncle(e2266,e2252)");
  REQUIRE(root.children.size() == 2);
  CHECK(root.children[0].atom == "brother(e2260,e2252)");
  CHECK(root.children[0].children.empty());
  CHECK(root.children[1].atom == "uncle(e2266,e2260)");
  REQUIRE(root.children[1].children.size() == 2);
  CHECK(root.children[1].children[0].atom == "sister(e2262,e2260)");
  CHECK(root.children[1].children[1].atom == "uncle(e2266,e2262)");
  CHECK(root.children[1].children[1].children.empty());

  std::string text = proof_tree_text(t);
  CHECK(text.find("    brother(e2260,e2252)") != std::string::npos);
  ProofTree back = parse_proof_tree_json(proof_tree_json(t));
  std::vector<ReplayStep> steps = proof_steps(back);
  REQUIRE(steps.size() == ok->steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(steps[i].clause_id == ok->steps[i].clause_id);
    CHECK(steps[i].rename_base == ok->steps[i].rename_base);
  }
  CHECK(replay_proof(q, p, steps, opts.resolution));
  steps.pop_back();
  CHECK_FALSE(replay_proof(q, p, steps, opts.resolution));
  CHECK_THROWS_AS(parse_proof_tree_json("{\"roots\": 3}"), ExportError);

  for (const auto& d : all)
    if (d.outcome != Outcome::True) {
      CHECK_THROWS_AS(export_proof_tree(d, p), ExportError);
      break;
    }
}

TEST_CASE("proof trees: built-in steps replay") {
  Program p = parse_program("sum(X, Y, Z) :- Z is X + Y. pick(X) :- between(1, 3, X), X > 1.");
  DerivationOptions opts;
  for (const char* text : {"sum(2, 3, 5)", "pick(3)"}) {
    Goal q = parse_query(text, p);
    for (const auto& d : enumerate_derivations(q, p, opts)) {
      if (d.outcome != Outcome::True) continue;
      ProofTree t = export_proof_tree(d, p);
      CHECK(replay_proof(q, p, proof_steps(parse_proof_tree_json(proof_tree_json(t))), opts.resolution));
    }
  }
}

TEST_CASE("prove: best proof, unprovable queries, and Monte Carlo against DP") {
  Program p = parse_program(
      "locIn(X, Y) :- neighOf(X, Z), locIn(Z, Y).\nneighOf(it, fr).\nlocIn(fr, eu).\nlocIn(tr, gr).\n"
      "locIn(gr, eu).\n");
  ScorerConfig cfg;
  cfg.dim = 4;
  cfg.init_std = 0.5;
  std::mt19937_64 rng(3);
  ScorerParams prm = ScorerParams::random(cfg, p.symbols().size(), p.signature().max_arity(), rng);
  Scorer sc(prm);
  DPOptions opts;
  opts.derivation.max_depth = 8;
  Goal q = parse_query("locIn(it, eu)", p);
  ProveResult r = prove(q, p, sc, opts, 8, 0, rng);
  CHECK(r.exact);
  REQUIRE(r.proof);
  CHECK(r.proof->prob <= r.p + 1e-15);
  CHECK(r.proof->prob == doctest::Approx(derivation_probability(r.proof->derivation, p, sc, opts.derivation)));
  ProofTree t = export_proof_tree(r.proof->derivation, p);
  CHECK(replay_proof(q, p, proof_steps(t), opts.derivation.resolution));

  ProveResult none = prove(parse_query("locIn(tr, eu)", p), p, sc, opts, 8, 0, rng);
  CHECK(none.p == 0.0);
  CHECK_FALSE(none.proof);
  CHECK_FALSE(none.failure.empty());

  MonteCarloEstimate mc = success_probability_mc(q, p, sc, opts.derivation, 20000, rng);
  CHECK(std::abs(mc.p - r.p) <= 3 * std::sqrt(r.p * (1 - r.p) / 20000.0));
}

TEST_CASE("kinship: generator invariants and PPO progress") {
  KinshipData kd = generate_kinship({});
  KGDataset d = build_kg(kd.rules, kd.train, kd.valid, kd.test);
  CHECK(d.entities.size() >= 45);
  CHECK(d.entities.size() <= 60);
  std::set<Triple> train(d.train.begin(), d.train.end());
  for (const auto& t : d.test) CHECK(train.count(t) == 0);
  // Every held-out uncle/aunt triple is provable from the facts.
  UniformModel u;
  DPOptions dp;
  dp.derivation.max_depth = 8;
  for (const auto* split : {&d.valid, &d.test})
    for (const auto& t : *split) CHECK(success_probability_dp(d.goal(t), d.program, u, dp) > 0.0);
  KinshipData again = generate_kinship({});
  CHECK(again.train == kd.train);
  CHECK(again.test == kd.test);

  ScorerConfig cfg;
  cfg.dim = 32;
  ScorerParams pol = make_kg_params(d, cfg, 3);
  cfg.readout = true;
  ScorerParams crit = make_kg_params(d, cfg, 4);
  auto queries = kg_training_queries(d, d.valid, 2, CorruptMode::Both, 5);
  KGTrainConfig tc;
  tc.ppo.entropy_coef = 0.05;
  tc.ppo.optimizer.lr = 0.003;
  tc.derivation = dp.derivation;
  KGTrainer tr(d, queries, pol, crit, tc);
  Scorer sc(pol);
  std::vector<double> checkpoints;
  for (int c = 0; c < 5; ++c) {
    for (int i = 0; i < 8; ++i) tr.iterate();
    checkpoints.push_back(mean_positive_success(d, queries, sc, dp));
  }
  for (std::size_t i = 1; i < checkpoints.size(); ++i) CHECK(checkpoints[i] > checkpoints[i - 1]);
}
