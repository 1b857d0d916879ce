#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dpl/logic/goal.hpp"
#include "dpl/scorer/params.hpp"
#include "dpl/sld/derivation.hpp"

namespace dpl {

using Vec = std::vector<double>;

class MissingPayload : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Feature vectors for subsymbolic payload ids.
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return features_.size(); }
  void set(PayloadId id, Vec features);
  const Vec& get(PayloadId id) const;
  bool contains(PayloadId id) const { return features_.count(id) > 0; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<PayloadId, Vec> features_;
};

/// Forward record of one goal or term embedding; replayed by Scorer::backward.
class EmbeddingTape {
 public:
  const Vec& value() const { return value_; }

 private:
  friend class Scorer;
  struct Node {
    enum Kind { Row, Compose, Project, Aggregate } kind = Row;
    std::size_t offset = 0;        // Row: first parameter of the row
    std::vector<int> children;     // Compose: head row, then args (-1 = padding); Aggregate: atoms
    Vec input;                     // Compose: concatenated input; Project: features; Aggregate: mean
    Vec out;
  };
  std::vector<Node> nodes_;
  Vec value_;
};

struct TransitionDistribution {
  Goal goal;
  std::vector<double> scores;
  std::vector<double> probs;
  std::vector<double> log_probs;
};

/// Goal-conditioned transition scorer: atoms embed through one shared affine
/// layer plus tanh over [head; args padded to max arity], goals aggregate
/// their atoms, and a successor's score is the dot product of the two goal
/// embeddings. Variables embed by canonical slot, so scores are invariant
/// under renaming.
class Scorer final : public TransitionModel {
 public:
  explicit Scorer(const ScorerParams& params, const FeatureStore* store = nullptr)
      : p_(params), store_(store) {}

  const ScorerParams& params() const { return p_; }

  EmbeddingTape forward_goal(const Goal& g) const;
  /// A standalone term; variables take slots by first occurrence in `t`.
  EmbeddingTape forward_term(const Term& t) const;
  /// Adds (d value / d params)^T d_out into `grad`.
  void backward(const EmbeddingTape& tape, std::span<const double> d_out, std::span<double> grad) const;

  Vec embed_goal(const Goal& g) const { return forward_goal(g).value(); }
  Vec embed_atom(const Atom& a) const;
  Vec embed_term(const Term& t) const { return forward_term(t).value(); }

  /// f(G, G') for every action of cs.
  std::vector<double> scores(const CandidateSet& cs) const;
  TransitionDistribution transition_distribution(const CandidateSet& cs) const;
  std::vector<double> distribution(const CandidateSet& cs) const override;

  /// Adds sum_k dscores[k] * d s_k / d params into `grad`.
  void backprop_scores(const CandidateSet& cs, std::span<const double> dscores, std::span<double> grad) const;

  /// log p(action `chosen` | cs.goal); adds scale * its gradient into `grad`.
  /// Forced sets carry no parameters and return 0.
  double logprob_and_grad(const CandidateSet& cs, std::size_t chosen, std::span<double> grad,
                          double scale = 1.0) const;
  std::pair<double, Vec> logprob_and_grad(const CandidateSet& cs, std::size_t chosen) const;

  /// Softmax over options o_k of embed(input) . embed(o_k); the perception
  /// readout used for subsymbolic inputs.
  std::vector<double> choice_scores(const Term& input, std::span<const Term> options) const;
  std::vector<double> choice_distribution(const Term& input, std::span<const Term> options) const;
  void backprop_choice(const Term& input, std::span<const Term> options, std::span<const double> dscores,
                       std::span<double> grad) const;

  /// Scalar readout w . embed_goal(G) + b (requires a readout block).
  double value(const Goal& g) const;
  void backprop_value(const Goal& g, double d_out, std::span<double> grad) const;

 private:
  using SlotMap = std::vector<VarId>;  // raw var ids in slot order
  int push_term(EmbeddingTape& tape, const Term& t, SlotMap& slots) const;
  int push_compose(EmbeddingTape& tape, std::size_t head_offset, std::span<const Term> args, SlotMap& slots) const;
  int push_row(EmbeddingTape& tape, std::size_t offset) const;

  const ScorerParams& p_;
  const FeatureStore* store_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace dpl
