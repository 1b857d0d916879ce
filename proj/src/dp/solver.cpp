#include "dpl/dp/solver.hpp"

#include <algorithm>
#include <cmath>

namespace dpl {

std::size_t DPSolver::KeyHash::operator()(const Key& k) const {
  std::size_t h = k.goal.hash() ^ (static_cast<std::size_t>(k.remaining + 2) * 0x9e3779b97f4a7c15ULL);
  for (int v : k.visited) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
  return h;
}

DPSolver::DPSolver(const Program& program, const TransitionModel& model, DPOptions opts)
    : program_(program), model_(model), scorer_(dynamic_cast<const Scorer*>(&model)), opts_(std::move(opts)) {}

int DPSolver::intern(const Goal& g) {
  auto [it, inserted] = goal_ids_.emplace(g, static_cast<int>(heights_.size()));
  if (inserted) {
    heights_.push_back(kUnbounded);
    if (heights_.size() > opts_.max_states)
      throw GoalSpaceExplosion("reachable goal space exceeds " + std::to_string(opts_.max_states) +
                               " states; use the policy-gradient trainer for this program");
  }
  return it->second;
}

void DPSolver::explore(const Goal& query) {
  goal_ids_.clear();
  heights_.clear();
  cyclic_ = false;
  const int max_depth = opts_.derivation.max_depth;
  std::vector<Goal> goals;
  std::vector<std::vector<int>> succ;
  std::vector<char> expanded;
  std::vector<VarId> next_var;
  auto add = [&](const Goal& g, VarId nv) {
    int id = intern(g);
    if (static_cast<std::size_t>(id) == goals.size()) {
      goals.push_back(g);
      succ.emplace_back();
      expanded.push_back(0);
      next_var.push_back(nv);
    }
    return id;
  };
  std::vector<int> frontier{add(query, query.next_free_var())};
  for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    std::vector<int> next;
    for (int id : frontier) {
      auto u = static_cast<std::size_t>(id);
      if (expanded[u] || goals[u].is_terminal()) continue;
      expanded[u] = 1;
      VarCounter counter{next_var[u]};
      CandidateSet cs = candidate_next_goals(goals[u], program_, opts_.derivation.resolution, counter);
      for (std::size_t k = 0; k < cs.size(); ++k) {
        std::size_t before = goals.size();
        int v = add(cs.next_goal(k), cs.next_var);
        succ[static_cast<std::size_t>(id)].push_back(v);
        if (goals.size() > before) next.push_back(v);
      }
    }
    frontier = std::move(next);
  }

  // Heights by iterative DFS; anything that reaches a cycle or an
  // unexpanded non-terminal goal stays unbounded.
  const std::size_t n = goals.size();
  std::vector<char> color(n, 0);
  std::vector<int> h(n, 0);
  std::vector<char> unbounded(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (color[s]) continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(s), 0}};
    color[s] = 1;
    while (!stack.empty()) {
      auto& [u, i] = stack.back();
      auto uu = static_cast<std::size_t>(u);
      if (!goals[uu].is_terminal() && !expanded[uu]) unbounded[uu] = 1;
      if (i < succ[uu].size()) {
        int v = succ[uu][i++];
        auto vv = static_cast<std::size_t>(v);
        if (color[vv] == 1) {
          cyclic_ = true;
          unbounded[uu] = 1;
        } else if (color[vv] == 0) {
          color[vv] = 1;
          stack.emplace_back(v, 0);
        } else {
          if (unbounded[vv]) unbounded[uu] = 1;
          h[uu] = std::max(h[uu], 1 + h[vv]);
        }
        continue;
      }
      color[uu] = 2;
      stack.pop_back();
      if (!stack.empty()) {
        auto pp = static_cast<std::size_t>(stack.back().first);
        if (unbounded[uu]) unbounded[pp] = 1;
        h[pp] = std::max(h[pp], 1 + h[uu]);
      }
    }
  }
  for (std::size_t u = 0; u < n; ++u) heights_[u] = unbounded[u] ? kUnbounded : h[u];
  if (cyclic_ && opts_.derivation.memory)
    warnings_.push_back("goal graph has cycles: values are memoized per visited set, which can grow quickly");
}

const EmbeddingTape& DPSolver::tape(const Goal& g) {
  auto it = tapes_.find(g);
  if (it == tapes_.end()) it = tapes_.emplace(g, scorer_->forward_goal(g)).first;
  return it->second;
}

std::vector<double> DPSolver::probabilities(const CandidateSet& cs) {
  if (cs.forced || !scorer_) return action_probabilities(model_, cs);
  const Vec& eg = tape(cs.goal).value();
  std::vector<double> s(cs.size());
  for (std::size_t k = 0; k < cs.size(); ++k) s[k] = dot(eg, tape(cs.next_goal(k)).value());
  return softmax(s);
}

int DPSolver::solve_node(const Goal& g, int remaining, VarId next_var) {
  Key key{g, remaining, {}};
  if (g.is_terminal()) {
    key.remaining = kUnbounded;
  } else if (remaining > 0) {
    int h = heights_.at(static_cast<std::size_t>(goal_ids_.at(g)));
    if (h != kUnbounded && h <= remaining) {
      key.remaining = kUnbounded;
    } else if (cyclic_ && opts_.derivation.memory) {
      key.visited = path_ids_;
      std::sort(key.visited.begin(), key.visited.end());
    }
  }
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  DPNode node;
  node.goal = g;
  node.remaining = remaining;
  if (g.is_true()) {
    node.p = 1.0;
  } else if (!g.is_false() && remaining > 0) {
    VarCounter counter{next_var};
    CandidateSet cs = legal_candidates(g, path_, program_, opts_.derivation, counter);
    node.forced = cs.forced;
    node.probs = probabilities(cs);
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const Goal& next = cs.next_goal(k);
      path_.push_back(next);
      bool tracked = !next.is_terminal() && remaining > 1;
      if (tracked) path_ids_.push_back(goal_ids_.at(next));
      int child = solve_node(next, remaining - 1, cs.next_var);
      if (tracked) path_ids_.pop_back();
      path_.pop_back();
      node.children.push_back(child);
      node.p += node.probs[k] * nodes_[static_cast<std::size_t>(child)].p;
    }
    node.cs = std::move(cs);
  }
  if (nodes_.size() >= opts_.max_states)
    throw GoalSpaceExplosion("value table exceeds " + std::to_string(opts_.max_states) +
                             " states; use the policy-gradient trainer for this program");
  nodes_.push_back(std::move(node));
  int id = static_cast<int>(nodes_.size()) - 1;
  memo_.emplace(std::move(key), id);
  return id;
}

double DPSolver::solve(const Goal& query) {
  nodes_.clear();
  memo_.clear();
  path_.clear();
  path_ids_.clear();
  warnings_.clear();
  explore(query);
  path_.push_back(query);
  if (!query.is_terminal()) path_ids_.push_back(goal_ids_.at(query));
  root_ = solve_node(query, opts_.derivation.max_depth, query.next_free_var());
  return nodes_[static_cast<std::size_t>(root_)].p;
}

void DPSolver::backprop(double scale, std::span<double> grad) const {
  if (!scorer_) throw std::logic_error("DP gradients need a Scorer transition model");
  if (root_ < 0) throw std::logic_error("backprop before solve");
  const std::size_t d = scorer_->params().dim();
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[static_cast<std::size_t>(root_)] = scale;
  std::unordered_map<Goal, Vec, GoalHash> d_emb;
  auto emb = [&](const Goal& g) -> const Vec& {
    auto it = tapes_.find(g);
    if (it == tapes_.end()) it = tapes_.emplace(g, scorer_->forward_goal(g)).first;
    return it->second.value();
  };
  auto acc = [&](const Goal& g, double c, const Vec& v) {
    Vec& a = d_emb[g];
    if (a.empty()) a.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) a[i] += c * v[i];
  };
  // Children complete before parents, so descending index order visits
  // every node after all of its parents.
  for (std::size_t n = nodes_.size(); n-- > 0;) {
    const DPNode& node = nodes_[n];
    const double a = adj[n];
    if (a == 0.0 || node.children.empty()) continue;
    for (std::size_t k = 0; k < node.children.size(); ++k) {
      auto c = static_cast<std::size_t>(node.children[k]);
      adj[c] += a * node.probs[k];
      if (node.forced) continue;
      double ds = a * node.probs[k] * (nodes_[c].p - node.p);
      if (ds == 0.0) continue;
      const Goal& next = node.cs.next_goal(k);
      acc(node.goal, ds, emb(next));
      acc(next, ds, emb(node.goal));
    }
  }
  for (const auto& [g, v] : d_emb) {
    auto it = tapes_.find(g);
    scorer_->backward(it->second, v, grad);
  }
}

double success_probability_dp(const Goal& query, const Program& program, const TransitionModel& model,
                              const DPOptions& opts) {
  DPSolver s(program, model, opts);
  return s.solve(query);
}

EpochStats dp_loss_and_grad(std::span<const LabeledQuery> data, const Program& program, const ScorerParams& params,
                            const FeatureStore* store, const DPOptions& opts, const std::string& objective,
                            std::span<double> grad) {
  if (objective != "linear" && objective != "log")
    throw std::invalid_argument("unknown objective '" + objective + "' (expected linear or log)");
  std::fill(grad.begin(), grad.end(), 0.0);
  Scorer scorer(params, store);
  EpochStats st;
  std::size_t npos = 0, nneg = 0;
  for (const auto& q : data) {
    DPSolver solver(program, scorer, opts);
    double p = solver.solve(q.goal);
    double y = q.label;
    double coef = 0.0;
    if (objective == "linear") {
      st.loss += (1.0 - 2.0 * y) * p;
      coef = 1.0 - 2.0 * y;
    } else {
      double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
      st.loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
      coef = -y / pc + (1.0 - y) / (1.0 - pc);
    }
    st.objective_j += (2.0 * y - 1.0) * p;
    (q.label ? st.mean_p_pos : st.mean_p_neg) += p;
    (q.label ? npos : nneg) += 1;
    if (coef != 0.0) solver.backprop(coef, grad);
  }
  if (npos) st.mean_p_pos /= static_cast<double>(npos);
  if (nneg) st.mean_p_neg /= static_cast<double>(nneg);
  st.grad_norm = l2_norm(grad);
  if (!std::isfinite(st.loss) || !std::isfinite(st.grad_norm))
    throw NonFiniteLoss("non-finite loss or gradient (loss " + format_double(st.loss) + ")");
  return st;
}

EpochStats dp_train_epoch(std::span<const LabeledQuery> data, const Program& program, ScorerParams& params,
                          const FeatureStore* store, Optimizer& opt, const DPOptions& opts,
                          const DPTrainConfig& cfg) {
  EpochStats total;
  std::size_t npos = 0, nneg = 0;
  for (const auto& q : data) (q.label ? npos : nneg) += 1;
  const std::size_t bs = cfg.batch_size == 0 ? data.size() : cfg.batch_size;
  Vec grad(params.size());
  double grad_sq = 0.0;
  for (std::size_t start = 0; start < data.size(); start += bs) {
    auto batch = data.subspan(start, std::min(bs, data.size() - start));
    EpochStats st = dp_loss_and_grad(batch, program, params, store, opts, cfg.objective, grad);
    total.loss += st.loss;
    total.objective_j += st.objective_j;
    std::size_t bp = 0, bn = 0;
    for (const auto& q : batch) (q.label ? bp : bn) += 1;
    total.mean_p_pos += st.mean_p_pos * static_cast<double>(bp);
    total.mean_p_neg += st.mean_p_neg * static_cast<double>(bn);
    grad_sq += st.grad_norm * st.grad_norm;
    opt.step(params.values(), grad);
    ++total.updates;
  }
  if (npos) total.mean_p_pos /= static_cast<double>(npos);
  if (nneg) total.mean_p_neg /= static_cast<double>(nneg);
  total.grad_norm = std::sqrt(grad_sq);
  return total;
}

}  // namespace dpl
