#include "dpl/scorer/universal.hpp"

#include <cmath>
#include <string>

namespace dpl {

std::vector<int> TargetTree::children(int node) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < parent.size(); ++i)
    if (parent[i] == node) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<Vec> construct_universal_embeddings(const TargetTree& tree, std::size_t dim) {
  const std::size_t n = tree.size();
  if (dim < n)
    throw DimensionTooSmall("embedding dimension " + std::to_string(dim) + " is smaller than the " +
                            std::to_string(n) + " tree nodes");
  if (tree.edge_prob.size() != n) throw std::invalid_argument("edge_prob must have one entry per node");
  std::vector<Vec> e(n, Vec(dim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    e[i][i] = 1.0;
    int p = tree.parent[i];
    if (i == 0) {
      if (p != -1) throw std::invalid_argument("node 0 must be the root");
      continue;
    }
    if (p < 0 || static_cast<std::size_t>(p) >= n) throw std::invalid_argument("invalid parent index");
    double q = tree.edge_prob[i];
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("edge probabilities must lie in (0, 1]");
    e[i][static_cast<std::size_t>(p)] = std::log(q);
  }
  return e;
}

std::vector<double> induced_child_probs(const TargetTree& tree, const std::vector<Vec>& emb, int node) {
  std::vector<double> s;
  for (int c : tree.children(node))
    s.push_back(dot(emb[static_cast<std::size_t>(node)], emb[static_cast<std::size_t>(c)]));
  return softmax(s);
}

std::vector<double> GoalTableModel::distribution(const CandidateSet& cs) const {
  auto find = [&](const Goal& g) -> const Vec& {
    auto it = table_.find(g);
    if (it == table_.end()) throw std::out_of_range("goal has no table embedding");
    return it->second;
  };
  const Vec& eg = find(cs.goal);
  std::vector<double> s(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) s[i] = dot(eg, find(cs.next_goal(i)));
  return softmax(s);
}

}  // namespace dpl
