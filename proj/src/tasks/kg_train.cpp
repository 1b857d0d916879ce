#include "dpl/tasks/kg_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpl/logic/parser.hpp"
#include "dpl/tasks/proof.hpp"

namespace dpl {

namespace {

DerivationOptions exclude_own_fact(const KGDataset& data, const Triple& t, DerivationOptions base) {
  auto it = data.fact_clause.find(t);
  base.resolution.excluded_clause = it == data.fact_clause.end() ? -1 : it->second;
  return base;
}

DPOptions exclude_own_fact(const KGDataset& data, const Triple& t, DPOptions base) {
  base.derivation = exclude_own_fact(data, t, base.derivation);
  return base;
}

std::string strip_ws(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

}  // namespace

std::vector<KGQuery> kg_training_queries(const KGDataset& data, std::span<const Triple> positives,
                                         std::size_t negatives_per_positive, CorruptMode mode, std::uint64_t seed) {
  std::set<Triple> known = data.known();
  std::vector<KGQuery> out;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    out.push_back({positives[i], 1});
    if (negatives_per_positive == 0) continue;
    for (const auto& n : sample_negatives(positives[i], negatives_per_positive, data.entities, mode, known,
                                          seed * 1000003ULL + i))
      out.push_back({n, 0});
  }
  return out;
}

ScorerParams make_kg_params(const KGDataset& data, const ScorerConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ScorerParams::random(cfg, data.program.symbols().size(), data.program.signature().max_arity(), rng);
}

std::vector<LabeledQuery> kg_labeled_queries(const KGDataset& data, std::span<const KGQuery> queries) {
  std::vector<LabeledQuery> out;
  for (std::size_t i = 0; i < queries.size(); ++i)
    out.push_back({data.goal(queries[i].triple), queries[i].label, static_cast<int>(i)});
  return out;
}

KGTrainer::KGTrainer(const KGDataset& data, std::vector<KGQuery> queries, ScorerParams& policy, ScorerParams& critic,
                     KGTrainConfig cfg)
    : data_(data),
      base_(cfg.derivation),
      queries_(std::move(queries)),
      trainer_(data.program, kg_labeled_queries(data, queries_), policy, critic, std::move(cfg),
               [this](const LabeledQuery& q) {
                 return options_for(queries_[static_cast<std::size_t>(q.id)].triple);
               }) {}

DerivationOptions KGTrainer::options_for(const Triple& t) const { return exclude_own_fact(data_, t, base_); }

double kg_rank_score(double p, double prior, double weight) {
  return std::log(std::max(p, 1e-300)) + weight * prior;
}

KGEval evaluate_kg(const KGDataset& data, std::span<const Triple> queries, const Scorer& model,
                   const KGEvalConfig& cfg, std::ostream* proofs) {
  std::set<Triple> known = data.known();
  std::mt19937_64 mc_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  KGEval ev;
  std::vector<RankResult> results;
  auto score = [&](const Triple& t, double* p_out, std::optional<BestProof>* proof) {
    Goal g = data.goal(t);
    DPOptions opts = exclude_own_fact(data, t, cfg.dp);
    ProveResult r;
    if (proof) {
      r = prove(g, data.program, model, opts, cfg.beam_width, cfg.mc_samples, mc_rng);
      *proof = r.proof;
    } else {
      try {
        r.p = success_probability_dp(g, data.program, model, opts);
      } catch (const GoalSpaceExplosion&) {
        r.p = success_probability_mc(g, data.program, model, opts.derivation, cfg.mc_samples, mc_rng).p;
        r.exact = false;
      }
    }
    if (!r.exact) ++ev.mc_fallbacks;
    *p_out = r.p;
    double prior = 0.0;
    if (cfg.priors) {
      auto it = cfg.priors->find(strip_ws(to_string(g, data.program.symbols())));
      if (it != cfg.priors->end()) prior = it->second;
    }
    return kg_rank_score(r.p, prior, cfg.prior_weight);
  };
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Triple& q = queries[i];
    RankResult rr;
    double p = 0;
    std::optional<BestProof> proof;
    rr.true_score = score(q, &p, cfg.export_proofs ? &proof : nullptr);
    ev.mean_p_true += p / static_cast<double>(queries.size());
    if (cfg.export_proofs && p > 0.0) {
      ++ev.proofs_expected;
      if (proof) {
        ProofTree tree = export_proof_tree(proof->derivation, data.program);
        std::string json = proof_tree_json(tree);
        ProofTree back = parse_proof_tree_json(json);
        DerivationOptions opts = exclude_own_fact(data, q, cfg.dp.derivation);
        if (replay_proof(data.goal(q), data.program, proof_steps(back), opts.resolution)) ++ev.proofs_replayed;
        if (proofs) *proofs << "# p=" << p << " proof_p=" << proof->prob << '\n' << proof_tree_text(tree);
      }
    }
    for (const auto& n : sample_negatives(q, cfg.negatives, data.entities, cfg.mode, known, cfg.seed * 7919ULL + i)) {
      double pn = 0;
      rr.corrupt_scores.push_back(score(n, &pn, nullptr));
    }
    results.push_back(std::move(rr));
  }
  ev.queries = queries.size();
  ev.metrics = rank_metrics(results);
  return ev;
}

RankMetrics evaluate_random_ranking(std::size_t queries, std::size_t negatives, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<RankResult> results(queries);
  for (auto& r : results) {
    r.true_score = u();
    for (std::size_t k = 0; k < negatives; ++k) r.corrupt_scores.push_back(u());
  }
  return rank_metrics(results);
}

double mean_positive_success(const KGDataset& data, std::span<const KGQuery> queries, const Scorer& model,
                             const DPOptions& opts) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& q : queries) {
    if (q.label != 1) continue;
    sum += success_probability_dp(data.goal(q.triple), data.program, model, exclude_own_fact(data, q.triple, opts));
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace dpl
