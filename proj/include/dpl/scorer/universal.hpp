#pragma once

#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dpl/scorer/scorer.hpp"

namespace dpl {

/// A rooted tree with a target distribution on each node's outgoing edges.
/// Node 0 is the root; parent[0] == -1 and edge_prob[0] is unused.
struct TargetTree {
  std::vector<int> parent;
  std::vector<double> edge_prob;

  std::size_t size() const { return parent.size(); }
  std::vector<int> children(int node) const;
};

class DimensionTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Node embeddings over the standard basis b_0..b_{n-1} of R^dim:
/// e_root = b_root, e_child = log p(child | parent) * b_parent + b_child, so
/// e_parent . e_child = log p(child | parent) and the softmax over each
/// node's children reproduces the target exactly.
std::vector<Vec> construct_universal_embeddings(const TargetTree& tree, std::size_t dim);

/// Softmax over the children of `node` under the given embeddings.
std::vector<double> induced_child_probs(const TargetTree& tree, const std::vector<Vec>& emb, int node);

/// Transition model reading goal embeddings from a table (unknown goals
/// are an error).
class GoalTableModel final : public TransitionModel {
 public:
  void set(const Goal& g, Vec e) { table_[g] = std::move(e); }
  std::vector<double> distribution(const CandidateSet& cs) const override;

 private:
  std::unordered_map<Goal, Vec, GoalHash> table_;
};

}  // namespace dpl
