#include "dpl/tasks/proof.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "dpl/logic/parser.hpp"
#include "dpl/mdp/env.hpp"
#include "dpl/pg/trainer.hpp"

namespace dpl {

namespace {

// Index of the built-in solution taken at `step`, matched on the successor goal.
VarId builtin_choice(const ResolutionStep& step, const Program& program, const ResolutionOptions& opts) {
  VarCounter counter{step.goal.next_free_var()};
  CandidateSet cs = candidate_next_goals(step.goal, program, opts, counter);
  for (std::size_t k = 0; k < cs.candidates.size(); ++k)
    if (cs.candidates[k].next == step.next) return static_cast<VarId>(k);
  throw ExportError("built-in step does not match any solution");
}

ProofNode build(const Derivation& d, std::size_t& idx, const Substitution& answer, const Program& program) {
  if (idx >= d.steps.size()) throw ExportError("derivation ends before the proof tree closes");
  const ResolutionStep& st = d.steps[idx++];
  ProofNode n;
  n.atom = to_string(apply(st.goal.leftmost(), answer), program.symbols());
  n.clause_id = st.clause_id;
  n.rename_base = st.clause_id == kBuiltinClause ? builtin_choice(st, program, {}) : st.rename_base;
  std::size_t body = st.clause_id >= 0 ? program.clause(st.clause_id).body.size() : 0;
  for (std::size_t i = 0; i < body; ++i) n.children.push_back(build(d, idx, answer, program));
  return n;
}

void text_node(const ProofNode& n, int depth, std::string& out) {
  out.append(static_cast<std::size_t>(2 * depth), ' ');
  out += n.atom;
  if (n.clause_id == kBuiltinClause)
    out += "  [builtin]";
  else
    out += "  [clause " + std::to_string(n.clause_id) + (n.children.empty() ? ", fact]" : "]");
  out += '\n';
  for (const auto& c : n.children) text_node(c, depth + 1, out);
}

nlohmann::json node_json(const ProofNode& n) {
  nlohmann::json j;
  j["atom"] = n.atom;
  j["clause_id"] = n.clause_id;
  j["rename_base"] = n.rename_base;
  j["children"] = nlohmann::json::array();
  for (const auto& c : n.children) j["children"].push_back(node_json(c));
  return j;
}

ProofNode node_from_json(const nlohmann::json& j) {
  ProofNode n;
  n.atom = j.at("atom").get<std::string>();
  n.clause_id = j.at("clause_id").get<int>();
  n.rename_base = j.at("rename_base").get<VarId>();
  for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
  return n;
}

void preorder(const ProofNode& n, std::vector<ReplayStep>& out) {
  out.push_back({n.clause_id, n.rename_base});
  for (const auto& c : n.children) preorder(c, out);
}

}  // namespace

ProofTree export_proof_tree(const Derivation& d, const Program& program) {
  if (d.outcome != Outcome::True) throw ExportError("only successful derivations have proof trees");
  ProofTree t;
  t.query = to_string(d.query, program.symbols());
  Substitution answer = d.answer();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < d.query.size(); ++i) t.roots.push_back(build(d, idx, answer, program));
  if (idx != d.steps.size()) throw ExportError("derivation has steps outside the proof tree");
  return t;
}

std::string proof_tree_text(const ProofTree& t) {
  std::string out = "query: " + t.query + '\n';
  for (const auto& r : t.roots) text_node(r, 1, out);
  return out;
}

std::string proof_tree_json(const ProofTree& t) {
  nlohmann::json j;
  j["query"] = t.query;
  j["roots"] = nlohmann::json::array();
  for (const auto& r : t.roots) j["roots"].push_back(node_json(r));
  return j.dump(2);
}

ProofTree parse_proof_tree_json(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    ProofTree t;
    t.query = j.at("query").get<std::string>();
    for (const auto& r : j.at("roots")) t.roots.push_back(node_from_json(r));
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ExportError(std::string("malformed proof tree: ") + e.what());
  }
}

std::vector<ReplayStep> proof_steps(const ProofTree& t) {
  std::vector<ReplayStep> out;
  for (const auto& r : t.roots) preorder(r, out);
  return out;
}

bool replay_proof(const Goal& query, const Program& program, const std::vector<ReplayStep>& steps,
                  const ResolutionOptions& opts) {
  Goal g = query;
  for (const auto& s : steps) {
    if (g.is_terminal()) return false;
    if (s.clause_id == kBuiltinClause) {
      VarCounter counter{g.next_free_var()};
      CandidateSet cs = candidate_next_goals(g, program, opts, counter);
      if (s.rename_base < 0 || static_cast<std::size_t>(s.rename_base) >= cs.candidates.size()) return false;
      g = cs.candidates[static_cast<std::size_t>(s.rename_base)].next;
      continue;
    }
    auto c = replay_action(g, program, s.clause_id, s.rename_base, opts);
    if (!c) return false;
    g = c->next;
  }
  return g.is_true();
}

std::optional<BestProof> best_proof(const Goal& query, const Program& program, const TransitionModel& model,
                                    const DerivationOptions& opts, std::size_t beam_width) {
  struct Beam {
    Derivation d;
    std::vector<Goal> path;
    VarId next_var;
    double logp;
  };
  if (query.is_true()) return BestProof{Derivation{query, {}, Outcome::True}, 1.0};
  if (query.is_false()) return std::nullopt;
  std::vector<Beam> beams{{Derivation{query, {}, Outcome::False}, {query}, query.next_free_var(), 0.0}};
  std::optional<BestProof> best;
  for (int depth = 0; depth < opts.max_depth && !beams.empty(); ++depth) {
    std::vector<Beam> next;
    for (const Beam& b : beams) {
      const Goal& g = b.d.steps.empty() ? b.d.query : b.d.steps.back().next;
      VarCounter counter{b.next_var};
      CandidateSet cs = legal_candidates(g, b.path, program, opts, counter);
      if (cs.empty()) continue;
      std::vector<double> probs = action_probabilities(model, cs);
      for (std::size_t k = 0; k < cs.candidates.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        const Candidate& c = cs.candidates[k];
        Beam nb = b;
        nb.d.steps.push_back({g, c.clause_id, c.rename_base, c.theta, c.next, probs[k]});
        nb.path.push_back(c.next);
        nb.next_var = cs.next_var;
        nb.logp += std::log(probs[k]);
        if (c.next.is_true()) {
          nb.d.outcome = Outcome::True;
          double p = std::exp(nb.logp);
          if (!best || p > best->prob) best = BestProof{std::move(nb.d), p};
        } else {
          next.push_back(std::move(nb));
        }
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) { return a.logp > b.logp; });
    if (next.size() > beam_width) next.resize(beam_width);
    // A partial path can only lose probability, so stop once no beam can win.
    if (best)
      std::erase_if(next, [&](const Beam& b) { return std::exp(b.logp) <= best->prob; });
    beams = std::move(next);
  }
  return best;
}

MonteCarloEstimate success_probability_mc(const Goal& query, const Program& program, const Scorer& model,
                                          const DerivationOptions& opts, std::size_t samples, std::mt19937_64& rng) {
  MonteCarloEstimate e;
  e.samples = samples;
  if (samples == 0) return e;
  ProofEnv env(program, opts);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i)
    hits += sample_episode(env, model, query, 1, 0, rng).outcome == Outcome::True;
  e.p = static_cast<double>(hits) / static_cast<double>(samples);
  e.stderr_ = std::sqrt(e.p * (1.0 - e.p) / static_cast<double>(samples));
  return e;
}

ProveResult prove(const Goal& query, const Program& program, const Scorer& model, const DPOptions& opts,
                  std::size_t beam_width, std::size_t mc_samples, std::mt19937_64& rng) {
  ProveResult r;
  try {
    r.p = success_probability_dp(query, program, model, opts);
  } catch (const GoalSpaceExplosion&) {
    MonteCarloEstimate e = success_probability_mc(query, program, model, opts.derivation, mc_samples, rng);
    r.p = e.p;
    r.exact = false;
    r.stderr_ = e.stderr_;
  }
  if (r.p > 0.0 || !r.exact) r.proof = best_proof(query, program, model, opts.derivation, beam_width);
  if (!r.proof) {
    r.failure = r.p == 0.0 ? "no successful derivation within depth " + std::to_string(opts.derivation.max_depth)
                           : "beam search found no successful derivation";
  }
  return r;
}

}  // namespace dpl
