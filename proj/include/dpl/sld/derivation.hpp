#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dpl/sld/resolution.hpp"

namespace dpl {

enum class Outcome { True, False, DepthExceeded };

const char* to_string(Outcome o);

struct ResolutionStep {
  Goal goal;
  int clause_id = kBuiltinClause;  // or kFalseAction
  VarId rename_base = 0;
  Substitution theta;
  Goal next;
  double prob = 1.0;
};

struct Derivation {
  Goal query;
  std::vector<ResolutionStep> steps;
  Outcome outcome = Outcome::False;

  /// Answer substitution: the step unifiers composed in order.
  Substitution answer() const;
};

struct DerivationOptions {
  ResolutionOptions resolution{.include_false = true, .occurs_check = false};
  /// Drop actions whose successor was already visited on the current path.
  bool memory = true;
  int max_depth = 20;
  std::size_t max_derivations = 1'000'000;
};

class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedTransition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// p(G' | G) over a non-forced candidate set, one entry per action.
class TransitionModel {
 public:
  virtual ~TransitionModel() = default;
  virtual std::vector<double> distribution(const CandidateSet& cs) const = 0;
};

class UniformModel final : public TransitionModel {
 public:
  std::vector<double> distribution(const CandidateSet& cs) const override;
};

/// Per-action probabilities, with forced built-in sets mapped to {1}.
std::vector<double> action_probabilities(const TransitionModel& model, const CandidateSet& cs);

/// Actions available at `goal` given the goals already on the path.
/// `counter` is advanced past every clause copy made here.
CandidateSet legal_candidates(const Goal& goal, const std::vector<Goal>& path, const Program& program,
                              const DerivationOptions& opts, VarCounter& counter);

/// Depth-first, clause-ordered walk over every derivation of `query`. The
/// visitor sees each complete derivation; step probabilities are filled in
/// when `model` is non-null. Throws ResourceLimit past opts.max_derivations.
void for_each_derivation(const Goal& query, const Program& program, const DerivationOptions& opts,
                         const TransitionModel* model, const std::function<void(const Derivation&)>& visit);

std::vector<Derivation> enumerate_derivations(const Goal& query, const Program& program,
                                              const DerivationOptions& opts, const TransitionModel* model = nullptr);

/// Product of the model's transition probabilities along `d`, recomputing
/// every candidate set (memory context included). Throws UndefinedTransition
/// when a recorded step is not among its goal's legal actions.
double derivation_probability(const Derivation& d, const Program& program, const TransitionModel& model,
                              const DerivationOptions& opts);

double success_probability_bruteforce(const Goal& query, const Program& program, const TransitionModel& model,
                                      const DerivationOptions& opts);

}  // namespace dpl
