#include "dpl/mdp/env.hpp"

#include <string>

namespace dpl {

EnvState ProofEnv::reset(const Goal& query, int label, int query_id) const {
  if (query.is_terminal()) throw std::invalid_argument("episode query is already terminal");
  if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
  EnvState s;
  s.goal = query;
  s.visited.push_back(query);
  s.label = label;
  s.query_id = query_id;
  s.next_var = query.next_free_var();
  return s;
}

CandidateSet ProofEnv::legal_actions(const EnvState& s) const {
  if (s.done || s.goal.is_terminal()) throw std::invalid_argument("no actions in a terminal state");
  VarCounter counter{s.next_var};
  return legal_candidates(s.goal, s.visited, program_, opts_, counter);
}

StepResult ProofEnv::step(const EnvState& s, std::size_t action) const { return step(s, legal_actions(s), action); }

StepResult ProofEnv::step(const EnvState& s, const CandidateSet& legal, std::size_t action) const {
  if (action >= legal.size())
    throw IllegalAction("action " + std::to_string(action) + " outside " + std::to_string(legal.size()) +
                        " legal actions");
  StepResult r;
  r.next = s;
  r.next.goal = legal.next_goal(action);
  r.next.depth = s.depth + 1;
  r.next.next_var = legal.next_var;
  r.next.visited.push_back(r.next.goal);
  if (r.next.goal.is_true()) {
    r.outcome = Outcome::True;
    r.reward = 2.0 * s.label - 1.0;
  } else if (r.next.goal.is_false()) {
    r.outcome = Outcome::False;
  } else if (r.next.depth >= opts_.max_depth) {
    r.outcome = Outcome::DepthExceeded;
  }
  r.done = r.outcome.has_value();
  r.next.done = r.done;
  if (trace_) {
    *trace_ << s.query_id << '\t' << s.depth << '\t' << legal.clause_id(action) << '\t' << r.next.goal.hash() << '\t'
            << r.reward << '\n';
  }
  return r;
}

}  // namespace dpl
