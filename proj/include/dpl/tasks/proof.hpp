#pragma once

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpl/dp/solver.hpp"
#include "dpl/scorer/scorer.hpp"
#include "dpl/sld/derivation.hpp"

namespace dpl {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A resolved atom, the clause that resolved it (kBuiltinClause for
/// built-ins), the fresh-variable base of that step, and its body atoms'
/// subtrees in order. Facts are leaves.
struct ProofNode {
  std::string atom;
  int clause_id = 0;
  VarId rename_base = 0;
  std::vector<ProofNode> children;
};

struct ProofTree {
  std::string query;
  std::vector<ProofNode> roots;  // one per query atom
};

/// Tree of a successful derivation, atoms shown under the answer substitution.
ProofTree export_proof_tree(const Derivation& d, const Program& program);

std::string proof_tree_text(const ProofTree& t);
std::string proof_tree_json(const ProofTree& t);
ProofTree parse_proof_tree_json(const std::string& text);

struct ReplayStep {
  int clause_id;
  VarId rename_base;
};

/// Resolution steps of the tree in the order a leftmost derivation takes them.
std::vector<ReplayStep> proof_steps(const ProofTree& t);

/// Re-executes `steps` from `query`; true when they all apply and end at True.
bool replay_proof(const Goal& query, const Program& program, const std::vector<ReplayStep>& steps,
                  const ResolutionOptions& opts = {});

struct BestProof {
  Derivation derivation;
  double prob = 0.0;
};

/// Highest-probability successful derivation found by beam search over the
/// model's transition distributions.
std::optional<BestProof> best_proof(const Goal& query, const Program& program, const TransitionModel& model,
                                    const DerivationOptions& opts, std::size_t beam_width = 8);

struct MonteCarloEstimate {
  double p = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// Fraction of sampled episodes that reach True, with its standard error.
MonteCarloEstimate success_probability_mc(const Goal& query, const Program& program, const Scorer& model,
                                          const DerivationOptions& opts, std::size_t samples, std::mt19937_64& rng);

struct ProveResult {
  double p = 0.0;
  bool exact = true;
  double stderr_ = 0.0;
  std::optional<BestProof> proof;
  std::string failure;
};

/// p_success by DP, or by Monte Carlo when the goal space cap trips, plus
/// the best proof.
ProveResult prove(const Goal& query, const Program& program, const Scorer& model, const DPOptions& opts,
                  std::size_t beam_width, std::size_t mc_samples, std::mt19937_64& rng);

}  // namespace dpl
