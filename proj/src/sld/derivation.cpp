#include "dpl/sld/derivation.hpp"

#include <algorithm>

namespace dpl {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::True: return "True";
    case Outcome::False: return "False";
    case Outcome::DepthExceeded: return "DepthExceeded";
  }
  return "?";
}

Substitution Derivation::answer() const {
  Substitution acc;
  for (const auto& s : steps) acc = compose(acc, s.theta);
  return acc;
}

std::vector<double> UniformModel::distribution(const CandidateSet& cs) const {
  return std::vector<double>(cs.size(), 1.0 / static_cast<double>(cs.size()));
}

std::vector<double> action_probabilities(const TransitionModel& model, const CandidateSet& cs) {
  if (cs.empty()) return {};
  if (cs.forced) return std::vector<double>(cs.size(), 1.0);
  return model.distribution(cs);
}

CandidateSet legal_candidates(const Goal& goal, const std::vector<Goal>& path, const Program& program,
                              const DerivationOptions& opts, VarCounter& counter) {
  CandidateSet cs = candidate_next_goals(goal, program, opts.resolution, counter);
  if (opts.memory) cs = without_visited(std::move(cs), path);
  return cs;
}

namespace {

class Walker {
 public:
  Walker(const Program& p, const DerivationOptions& o, const TransitionModel* m,
         const std::function<void(const Derivation&)>& v)
      : program_(p), opts_(o), model_(m), visit_(v) {}

  void run(const Goal& query) {
    d_.query = query;
    path_.push_back(query);
    walk(query, VarCounter{query.next_free_var()});
  }

 private:
  void emit(Outcome o) {
    if (++count_ > opts_.max_derivations)
      throw ResourceLimit("derivation count exceeds cap of " + std::to_string(opts_.max_derivations));
    d_.outcome = o;
    visit_(d_);
  }

  void walk(Goal g, VarCounter counter) {
    if (g.is_true()) return emit(Outcome::True);
    if (g.is_false()) return emit(Outcome::False);
    if (static_cast<int>(d_.steps.size()) >= opts_.max_depth) return emit(Outcome::DepthExceeded);
    CandidateSet cs = legal_candidates(g, path_, program_, opts_, counter);
    if (cs.empty()) return emit(Outcome::False);
    std::vector<double> probs;
    if (model_) probs = action_probabilities(*model_, cs);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      ResolutionStep s;
      s.goal = g;
      s.clause_id = cs.clause_id(i);
      s.next = cs.next_goal(i);
      if (!cs.is_false_action(i)) {
        s.rename_base = cs.candidates[i].rename_base;
        s.theta = cs.candidates[i].theta;
      }
      s.prob = model_ ? probs[i] : 1.0;
      d_.steps.push_back(std::move(s));
      path_.push_back(d_.steps.back().next);
      walk(d_.steps.back().next, counter);
      path_.pop_back();
      d_.steps.pop_back();
    }
  }

  const Program& program_;
  const DerivationOptions& opts_;
  const TransitionModel* model_;
  const std::function<void(const Derivation&)>& visit_;
  Derivation d_;
  std::vector<Goal> path_;
  std::size_t count_ = 0;
};

}  // namespace

void for_each_derivation(const Goal& query, const Program& program, const DerivationOptions& opts,
                         const TransitionModel* model, const std::function<void(const Derivation&)>& visit) {
  Walker(program, opts, model, visit).run(query);
}

std::vector<Derivation> enumerate_derivations(const Goal& query, const Program& program,
                                              const DerivationOptions& opts, const TransitionModel* model) {
  std::vector<Derivation> out;
  for_each_derivation(query, program, opts, model, [&](const Derivation& d) { out.push_back(d); });
  return out;
}

double derivation_probability(const Derivation& d, const Program& program, const TransitionModel& model,
                              const DerivationOptions& opts) {
  double p = 1.0;
  std::vector<Goal> path{d.query};
  VarCounter counter{d.query.next_free_var()};
  for (const auto& s : d.steps) {
    CandidateSet cs = legal_candidates(s.goal, path, program, opts, counter);
    std::size_t idx = cs.size();
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (cs.clause_id(i) == s.clause_id && cs.next_goal(i) == s.next) {
        idx = i;
        break;
      }
    }
    if (idx == cs.size()) throw UndefinedTransition("recorded step is not a legal action of its goal");
    p *= action_probabilities(model, cs)[idx];
    path.push_back(s.next);
  }
  return p;
}

double success_probability_bruteforce(const Goal& query, const Program& program, const TransitionModel& model,
                                      const DerivationOptions& opts) {
  double total = 0.0;
  for_each_derivation(query, program, opts, &model, [&](const Derivation& d) {
    if (d.outcome != Outcome::True) return;
    double p = 1.0;
    for (const auto& s : d.steps) p *= s.prob;
    total += p;
  });
  return total;
}

}  // namespace dpl
