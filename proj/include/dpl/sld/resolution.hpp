#pragma once

#include <cstddef>
#include <vector>

#include "dpl/logic/goal.hpp"
#include "dpl/logic/program.hpp"
#include "dpl/logic/unify.hpp"

namespace dpl {

/// Clause id used for steps taken by an evaluable built-in.
inline constexpr int kBuiltinClause = -1;
/// Clause id used for the synthetic False action.
inline constexpr int kFalseAction = -2;

struct Candidate {
  int clause_id = kBuiltinClause;
  /// First fresh variable id used when the clause was renamed apart; replaying
  /// rename_apart from this base reproduces the exact clause copy.
  VarId rename_base = 0;
  Substitution theta;
  Goal next;
};

/// The successors of a goal under leftmost selection: one entry per clause
/// whose renamed head unifies with the leftmost atom, ascending clause id,
/// optionally followed by the False action.
///
/// A `forced` set comes from an evaluable built-in: it has at most one
/// successor, carries probability 1, and never offers a False alternative
/// unless the built-in failed (then False is the only successor).
struct CandidateSet {
  Goal goal;
  std::vector<Candidate> candidates;
  bool include_false = false;
  bool forced = false;
  /// Fresh-variable counter after the clause copies made for this set.
  VarId next_var = 0;

  std::size_t size() const { return candidates.size() + (include_false ? 1 : 0); }
  bool empty() const { return size() == 0; }
  bool is_false_action(std::size_t i) const { return i == candidates.size(); }
  /// Successor goal of action i (the False terminal for the False action).
  const Goal& next_goal(std::size_t i) const;
  int clause_id(std::size_t i) const { return is_false_action(i) ? kFalseAction : candidates[i].clause_id; }
};

struct ResolutionOptions {
  bool include_false = false;
  bool occurs_check = false;
  /// A clause id never used for resolution (e.g. a query's own fact); -1 for none.
  int excluded_clause = -1;
};

/// Candidate successors of a non-terminal goal. Fresh clause variables come
/// from `counter`, which is first advanced past every variable in `goal`.
CandidateSet candidate_next_goals(const Goal& goal, const Program& program, const ResolutionOptions& opts,
                                  VarCounter& counter);
CandidateSet candidate_next_goals(const Goal& goal, const Program& program, const ResolutionOptions& opts = {});

/// res(G, C, theta): leftmost atom replaced by body(C), theta applied to the
/// whole goal. `clause` must be the renamed copy theta was computed against.
Goal resolve_step(const Goal& goal, const Clause& clause, const Substitution& theta);

/// Drops candidates whose successor is in `visited`; the False action is kept.
CandidateSet without_visited(CandidateSet cs, const std::vector<Goal>& visited);

/// Re-executes one recorded action (clause id + rename base, or a built-in)
/// against `goal`. Returns nullopt when it does not apply.
std::optional<Candidate> replay_action(const Goal& goal, const Program& program, int clause_id, VarId rename_base,
                                       const ResolutionOptions& opts = {});

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integer evaluation of an arithmetic expression (+, -, *, //, mod).
std::int64_t evaluate(const Term& expr);

}  // namespace dpl
