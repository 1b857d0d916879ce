#include "dpl/sld/resolution.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace dpl {

namespace {

const Goal& false_goal() {
  static const Goal g = Goal::failure();
  return g;
}

Goal rest_with(const Goal& goal, const Substitution& theta) {
  std::vector<Atom> atoms;
  atoms.reserve(goal.size() - 1);
  for (std::size_t i = 1; i < goal.size(); ++i) atoms.push_back(apply(goal.atoms()[i], theta));
  return Goal(std::move(atoms));
}

Candidate builtin_candidate(const Goal& goal, Substitution theta) {
  Candidate c;
  c.clause_id = kBuiltinClause;
  c.next = rest_with(goal, theta);
  c.theta = std::move(theta);
  return c;
}

bool compare(SymbolId op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case sym::kArithEq: return a == b;
    case sym::kArithNe: return a != b;
    case sym::kLt: return a < b;
    case sym::kGt: return a > b;
    case sym::kLe: return a <= b;
    case sym::kGe: return a >= b;
    default: return false;
  }
}

// Built-in reduction of the leftmost atom. Deterministic built-ins produce a
// forced set; between/3 with an unbound third argument enumerates its values
// as ordinary (scored) candidates.
CandidateSet builtin_candidates(const Goal& goal, const ResolutionOptions& opts) {
  CandidateSet cs;
  cs.goal = goal;
  cs.forced = true;
  const Atom& a = goal.leftmost();
  try {
    switch (a.predicate) {
      case sym::kIs: {
        std::int64_t v = evaluate(a.args[1]);
        if (auto theta = unify(a.args[0], Term::integer(v), {opts.occurs_check}))
          cs.candidates.push_back(builtin_candidate(goal, std::move(*theta)));
        break;
      }
      case sym::kUnify: {
        if (auto theta = unify(a.args[0], a.args[1], {opts.occurs_check}))
          cs.candidates.push_back(builtin_candidate(goal, std::move(*theta)));
        break;
      }
      case sym::kBetween: {
        std::int64_t lo = evaluate(a.args[0]);
        std::int64_t hi = evaluate(a.args[1]);
        const Term& x = a.args[2];
        if (x.is_var()) {
          cs.forced = false;
          for (std::int64_t v = lo; v <= hi; ++v) {
            Substitution theta;
            theta.bind(x.var(), Term::integer(v));
            cs.candidates.push_back(builtin_candidate(goal, std::move(theta)));
          }
        } else {
          std::int64_t v = evaluate(x);
          if (lo <= v && v <= hi) cs.candidates.push_back(builtin_candidate(goal, {}));
        }
        break;
      }
      default:
        if (compare(a.predicate, evaluate(a.args[0]), evaluate(a.args[1])))
          cs.candidates.push_back(builtin_candidate(goal, {}));
        break;
    }
  } catch (const EvaluationError&) {
    cs.candidates.clear();
    cs.forced = true;
  }
  cs.include_false = opts.include_false && (!cs.forced || cs.candidates.empty());
  return cs;
}

}  // namespace

const Goal& CandidateSet::next_goal(std::size_t i) const {
  if (is_false_action(i)) return false_goal();
  return candidates.at(i).next;
}

std::int64_t evaluate(const Term& expr) {
  switch (expr.kind()) {
    case TermKind::Integer:
      return expr.value();
    case TermKind::Variable:
      throw EvaluationError("unbound variable in arithmetic");
    case TermKind::Compound: {
      if (expr.arity() != 2) break;
      std::int64_t l = evaluate(expr.args()[0]);
      std::int64_t r = evaluate(expr.args()[1]);
      switch (expr.symbol()) {
        case sym::kPlus: return l + r;
        case sym::kMinus: return l - r;
        case sym::kTimes: return l * r;
        case sym::kIntDiv:
          if (r == 0) throw EvaluationError("division by zero");
          return l / r;
        case sym::kMod: {
          if (r == 0) throw EvaluationError("division by zero");
          std::int64_t m = l % r;
          if (m != 0 && ((m < 0) != (r < 0))) m += r;
          return m;
        }
        default:
          break;
      }
      break;
    }
    default:
      break;
  }
  throw EvaluationError("not an arithmetic expression");
}

Goal resolve_step(const Goal& goal, const Clause& clause, const Substitution& theta) {
  assert(!goal.is_terminal());
  std::vector<Atom> atoms;
  atoms.reserve(clause.body.size() + goal.size() - 1);
  for (const Atom& b : clause.body) atoms.push_back(apply(b, theta));
  for (std::size_t i = 1; i < goal.size(); ++i) atoms.push_back(apply(goal.atoms()[i], theta));
  return Goal(std::move(atoms));
}

CandidateSet candidate_next_goals(const Goal& goal, const Program& program, const ResolutionOptions& opts,
                                  VarCounter& counter) {
  if (goal.is_terminal()) throw std::invalid_argument("candidate_next_goals: terminal goal");
  counter.next = std::max(counter.next, goal.next_free_var());
  const Atom& first = goal.leftmost();
  if (program.symbols().is_builtin_predicate(first.predicate, first.arity())) {
    CandidateSet cs = builtin_candidates(goal, opts);
    cs.next_var = counter.next;
    return cs;
  }

  CandidateSet cs;
  cs.goal = goal;
  cs.include_false = opts.include_false;
  for (int id : program.clauses_for(first.predicate)) {
    if (id == opts.excluded_clause) continue;
    const Clause& c = program.clause(id);
    if (c.head.arity() != first.arity()) continue;
    VarId base = counter.next;
    Clause renamed = rename_apart(c, counter);
    auto theta = unify(first, renamed.head, {opts.occurs_check});
    if (!theta) {
      counter.next = base;  // nothing escaped; reuse the ids
      continue;
    }
    Candidate cand;
    cand.clause_id = id;
    cand.rename_base = base;
    cand.next = resolve_step(goal, renamed, *theta);
    cand.theta = std::move(*theta);
    cs.candidates.push_back(std::move(cand));
  }
  cs.next_var = counter.next;
  return cs;
}

CandidateSet candidate_next_goals(const Goal& goal, const Program& program, const ResolutionOptions& opts) {
  VarCounter counter;
  return candidate_next_goals(goal, program, opts, counter);
}

CandidateSet without_visited(CandidateSet cs, const std::vector<Goal>& visited) {
  auto seen = [&](const Candidate& c) {
    return std::find(visited.begin(), visited.end(), c.next) != visited.end();
  };
  cs.candidates.erase(std::remove_if(cs.candidates.begin(), cs.candidates.end(), seen), cs.candidates.end());
  return cs;
}

std::optional<Candidate> replay_action(const Goal& goal, const Program& program, int clause_id, VarId rename_base,
                                       const ResolutionOptions& opts) {
  if (goal.is_terminal()) return std::nullopt;
  if (clause_id == kBuiltinClause) {
    // Built-ins are re-evaluated; between/3 choices are matched by the caller.
    CandidateSet cs = builtin_candidates(goal, opts);
    if (cs.candidates.size() != 1) return std::nullopt;
    return cs.candidates.front();
  }
  if (clause_id < 0 || static_cast<std::size_t>(clause_id) >= program.size()) return std::nullopt;
  VarCounter counter{rename_base};
  Clause renamed = rename_apart(program.clause(clause_id), counter);
  auto theta = unify(goal.leftmost(), renamed.head, {opts.occurs_check});
  if (!theta) return std::nullopt;
  Candidate c;
  c.clause_id = clause_id;
  c.rename_base = rename_base;
  c.next = resolve_step(goal, renamed, *theta);
  c.theta = std::move(*theta);
  return c;
}

}  // namespace dpl
