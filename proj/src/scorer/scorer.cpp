#include "dpl/scorer/scorer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace dpl {

void FeatureStore::set(PayloadId id, Vec features) {
  if (features.size() != dim_)
    throw std::invalid_argument("feature vector of size " + std::to_string(features.size()) + ", store expects " +
                                std::to_string(dim_));
  features_[id] = std::move(features);
}

const Vec& FeatureStore::get(PayloadId id) const {
  auto it = features_.find(id);
  if (it == features_.end()) throw MissingPayload("no features for payload " + std::to_string(id));
  return it->second;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  double m = *std::max_element(scores.begin(), scores.end());
  double z = 0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(scores[i] - m));
  for (double& v : p) v /= z;
  return p;
}

int Scorer::push_row(EmbeddingTape& tape, std::size_t offset) const {
  EmbeddingTape::Node n;
  n.kind = EmbeddingTape::Node::Row;
  n.offset = offset;
  const double* r = p_.at(offset);
  n.out.assign(r, r + p_.dim());
  tape.nodes_.push_back(std::move(n));
  return static_cast<int>(tape.nodes_.size()) - 1;
}

int Scorer::push_compose(EmbeddingTape& tape, std::size_t head_offset, std::span<const Term> args,
                         SlotMap& slots) const {
  const std::size_t d = p_.dim();
  const std::size_t width = d * (1 + p_.max_arity());
  if (args.size() > p_.max_arity())
    throw std::out_of_range("arity " + std::to_string(args.size()) + " exceeds the scorer's max arity " +
                            std::to_string(p_.max_arity()));
  std::vector<int> children;
  children.push_back(push_row(tape, head_offset));
  for (const Term& a : args) children.push_back(push_term(tape, a, slots));
  EmbeddingTape::Node n;
  n.kind = EmbeddingTape::Node::Compose;
  n.input.assign(width, 0.0);
  for (std::size_t k = 0; k < children.size(); ++k) {
    const Vec& c = tape.nodes_[static_cast<std::size_t>(children[k])].out;
    std::copy(c.begin(), c.end(), n.input.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  n.children = std::move(children);
  const double* w = p_.at(p_.compose_w().offset);
  const double* b = p_.at(p_.compose_b().offset);
  n.out.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = b[i];
    const double* row = w + i * width;
    // Padding positions are zero; only the used prefix contributes.
    std::size_t used = n.children.size() * d;
    for (std::size_t j = 0; j < used; ++j) s += row[j] * n.input[j];
    n.out[i] = std::tanh(s);
  }
  tape.nodes_.push_back(std::move(n));
  return static_cast<int>(tape.nodes_.size()) - 1;
}

int Scorer::push_term(EmbeddingTape& tape, const Term& t, SlotMap& slots) const {
  switch (t.kind()) {
    case TermKind::Constant:
      return push_row(tape, p_.symbol_offset(static_cast<std::size_t>(t.symbol())));
    case TermKind::Integer:
      return push_row(tape, p_.int_offset(t.value()));
    case TermKind::Variable: {
      auto it = std::find(slots.begin(), slots.end(), t.var());
      std::size_t slot = static_cast<std::size_t>(it - slots.begin());
      if (it == slots.end()) slots.push_back(t.var());
      return push_row(tape, p_.var_offset(slot));
    }
    case TermKind::Compound:
      return push_compose(tape, p_.symbol_offset(static_cast<std::size_t>(t.symbol())), t.args(), slots);
    case TermKind::Subsymbolic: {
      if (!store_) throw MissingPayload("subsymbolic term without a feature store");
      if (p_.config().feature_dim == 0) throw MissingPayload("scorer has no subsymbolic projection");
      const Vec& f = store_->get(t.payload());
      if (f.size() != p_.config().feature_dim)
        throw MissingPayload("payload " + std::to_string(t.payload()) + " has " + std::to_string(f.size()) +
                             " features, projection expects " + std::to_string(p_.config().feature_dim));
      const std::size_t d = p_.dim(), fd = f.size();
      EmbeddingTape::Node n;
      n.kind = EmbeddingTape::Node::Project;
      n.input = f;
      n.out.resize(d);
      const double* w = p_.at(p_.project_w().offset);
      const double* b = p_.at(p_.project_b().offset);
      for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < fd; ++j) s += w[i * fd + j] * f[j];
        n.out[i] = s;
      }
      tape.nodes_.push_back(std::move(n));
      return static_cast<int>(tape.nodes_.size()) - 1;
    }
  }
  return -1;
}

EmbeddingTape Scorer::forward_goal(const Goal& g) const {
  EmbeddingTape tape;
  if (g.is_false() || g.is_true()) {
    push_row(tape, g.is_true() ? p_.true_offset() : p_.false_offset());
    tape.value_ = tape.nodes_.back().out;
    return tape;
  }
  const std::size_t d = p_.dim();
  SlotMap slots;
  EmbeddingTape::Node agg;
  agg.kind = EmbeddingTape::Node::Aggregate;
  for (const Atom& a : g.atoms())
    agg.children.push_back(push_compose(tape, p_.symbol_offset(static_cast<std::size_t>(a.predicate)), a.args, slots));
  Vec pooled(d, 0.0);
  for (int c : agg.children) {
    const Vec& e = tape.nodes_[static_cast<std::size_t>(c)].out;
    for (std::size_t i = 0; i < d; ++i) pooled[i] += e[i];
  }
  const double n = static_cast<double>(agg.children.size());
  switch (p_.config().aggregator) {
    case Aggregator::Sum:
      agg.out = pooled;
      break;
    case Aggregator::Mean:
      for (double& v : pooled) v /= n;
      agg.out = pooled;
      break;
    case Aggregator::Affine: {
      for (double& v : pooled) v /= n;
      const double* w = p_.at(p_.agg_w().offset);
      const double* b = p_.at(p_.agg_b().offset);
      agg.out.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < d; ++j) s += w[i * d + j] * pooled[j];
        agg.out[i] = s;
      }
      agg.input = std::move(pooled);
      break;
    }
  }
  tape.value_ = agg.out;
  tape.nodes_.push_back(std::move(agg));
  return tape;
}

EmbeddingTape Scorer::forward_term(const Term& t) const {
  EmbeddingTape tape;
  SlotMap slots;
  push_term(tape, t, slots);
  tape.value_ = tape.nodes_.back().out;
  return tape;
}

Vec Scorer::embed_atom(const Atom& a) const {
  EmbeddingTape tape;
  SlotMap slots;
  push_compose(tape, p_.symbol_offset(static_cast<std::size_t>(a.predicate)), a.args, slots);
  return tape.nodes_.back().out;
}

void Scorer::backward(const EmbeddingTape& tape, std::span<const double> d_out, std::span<double> grad) const {
  assert(grad.size() == p_.size());
  const std::size_t d = p_.dim();
  const auto& nodes = tape.nodes_;
  std::vector<Vec> adj(nodes.size());
  adj.back().assign(d_out.begin(), d_out.end());
  for (std::size_t k = nodes.size(); k-- > 0;) {
    if (adj[k].empty()) continue;
    const auto& n = nodes[k];
    const Vec& g = adj[k];
    auto add_child = [&](int c, const double* src) {
      Vec& a = adj[static_cast<std::size_t>(c)];
      if (a.empty()) a.assign(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) a[i] += src[i];
    };
    switch (n.kind) {
      case EmbeddingTape::Node::Row:
        for (std::size_t i = 0; i < d; ++i) grad[n.offset + i] += g[i];
        break;
      case EmbeddingTape::Node::Compose: {
        const std::size_t width = n.input.size();
        const std::size_t used = n.children.size() * d;
        const double* w = p_.at(p_.compose_w().offset);
        double* gw = grad.data() + p_.compose_w().offset;
        double* gb = grad.data() + p_.compose_b().offset;
        Vec dx(used, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
          double dz = g[i] * (1.0 - n.out[i] * n.out[i]);
          if (dz == 0.0) continue;
          gb[i] += dz;
          const double* row = w + i * width;
          double* grow = gw + i * width;
          for (std::size_t j = 0; j < used; ++j) {
            grow[j] += dz * n.input[j];
            dx[j] += dz * row[j];
          }
        }
        for (std::size_t c = 0; c < n.children.size(); ++c) add_child(n.children[c], dx.data() + c * d);
        break;
      }
      case EmbeddingTape::Node::Project: {
        const std::size_t fd = n.input.size();
        double* gw = grad.data() + p_.project_w().offset;
        double* gb = grad.data() + p_.project_b().offset;
        for (std::size_t i = 0; i < d; ++i) {
          gb[i] += g[i];
          for (std::size_t j = 0; j < fd; ++j) gw[i * fd + j] += g[i] * n.input[j];
        }
        break;
      }
      case EmbeddingTape::Node::Aggregate: {
        const double cnt = static_cast<double>(n.children.size());
        Vec da(d);
        switch (p_.config().aggregator) {
          case Aggregator::Sum:
            da = g;
            break;
          case Aggregator::Mean:
            for (std::size_t i = 0; i < d; ++i) da[i] = g[i] / cnt;
            break;
          case Aggregator::Affine: {
            const double* w = p_.at(p_.agg_w().offset);
            double* gw = grad.data() + p_.agg_w().offset;
            double* gb = grad.data() + p_.agg_b().offset;
            std::fill(da.begin(), da.end(), 0.0);
            for (std::size_t i = 0; i < d; ++i) {
              gb[i] += g[i];
              for (std::size_t j = 0; j < d; ++j) {
                gw[i * d + j] += g[i] * n.input[j];
                da[j] += w[i * d + j] * g[i];
              }
            }
            for (double& v : da) v /= cnt;
            break;
          }
        }
        for (int c : n.children) add_child(c, da.data());
        break;
      }
    }
  }
}

std::vector<double> Scorer::scores(const CandidateSet& cs) const {
  Vec eg = embed_goal(cs.goal);
  std::vector<double> s(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) s[i] = dot(eg, embed_goal(cs.next_goal(i)));
  return s;
}

TransitionDistribution Scorer::transition_distribution(const CandidateSet& cs) const {
  TransitionDistribution t;
  t.goal = cs.goal;
  t.scores = scores(cs);
  t.probs = softmax(t.scores);
  t.log_probs.resize(t.scores.size());
  if (!t.scores.empty()) {
    double m = *std::max_element(t.scores.begin(), t.scores.end());
    double z = 0;
    for (double s : t.scores) z += std::exp(s - m);
    double lz = m + std::log(z);
    for (std::size_t i = 0; i < t.scores.size(); ++i) t.log_probs[i] = t.scores[i] - lz;
  }
  return t;
}

std::vector<double> Scorer::distribution(const CandidateSet& cs) const { return softmax(scores(cs)); }

void Scorer::backprop_scores(const CandidateSet& cs, std::span<const double> dscores, std::span<double> grad) const {
  const std::size_t d = p_.dim();
  EmbeddingTape src = forward_goal(cs.goal);
  Vec d_src(d, 0.0);
  for (std::size_t k = 0; k < cs.size(); ++k) {
    if (dscores[k] == 0.0) continue;
    EmbeddingTape dst = forward_goal(cs.next_goal(k));
    Vec d_dst(d);
    for (std::size_t i = 0; i < d; ++i) {
      d_src[i] += dscores[k] * dst.value()[i];
      d_dst[i] = dscores[k] * src.value()[i];
    }
    backward(dst, d_dst, grad);
  }
  backward(src, d_src, grad);
}

double Scorer::logprob_and_grad(const CandidateSet& cs, std::size_t chosen, std::span<double> grad,
                                double scale) const {
  if (chosen >= cs.size()) throw std::out_of_range("chosen action outside the candidate set");
  if (cs.forced) return 0.0;
  TransitionDistribution t = transition_distribution(cs);
  std::vector<double> ds(cs.size());
  for (std::size_t k = 0; k < ds.size(); ++k) ds[k] = scale * ((k == chosen ? 1.0 : 0.0) - t.probs[k]);
  backprop_scores(cs, ds, grad);
  return t.log_probs[chosen];
}

std::pair<double, Vec> Scorer::logprob_and_grad(const CandidateSet& cs, std::size_t chosen) const {
  Vec g(p_.size(), 0.0);
  double lp = logprob_and_grad(cs, chosen, g);
  return {lp, std::move(g)};
}

std::vector<double> Scorer::choice_scores(const Term& input, std::span<const Term> options) const {
  Vec e = embed_term(input);
  std::vector<double> s(options.size());
  for (std::size_t k = 0; k < options.size(); ++k) s[k] = dot(e, embed_term(options[k]));
  return s;
}

std::vector<double> Scorer::choice_distribution(const Term& input, std::span<const Term> options) const {
  return softmax(choice_scores(input, options));
}

void Scorer::backprop_choice(const Term& input, std::span<const Term> options, std::span<const double> dscores,
                             std::span<double> grad) const {
  const std::size_t d = p_.dim();
  EmbeddingTape src = forward_term(input);
  Vec d_src(d, 0.0);
  for (std::size_t k = 0; k < options.size(); ++k) {
    if (dscores[k] == 0.0) continue;
    EmbeddingTape dst = forward_term(options[k]);
    Vec d_dst(d);
    for (std::size_t i = 0; i < d; ++i) {
      d_src[i] += dscores[k] * dst.value()[i];
      d_dst[i] = dscores[k] * src.value()[i];
    }
    backward(dst, d_dst, grad);
  }
  backward(src, d_src, grad);
}

double Scorer::value(const Goal& g) const {
  if (!p_.config().readout) throw std::logic_error("scorer has no readout block");
  Vec e = embed_goal(g);
  return dot(e, std::span<const double>(p_.at(p_.readout_w().offset), p_.dim())) + *p_.at(p_.readout_b().offset);
}

void Scorer::backprop_value(const Goal& g, double d_out, std::span<double> grad) const {
  if (!p_.config().readout) throw std::logic_error("scorer has no readout block");
  const std::size_t d = p_.dim();
  EmbeddingTape t = forward_goal(g);
  const double* w = p_.at(p_.readout_w().offset);
  Vec de(d);
  for (std::size_t i = 0; i < d; ++i) {
    grad[p_.readout_w().offset + i] += d_out * t.value()[i];
    de[i] = d_out * w[i];
  }
  grad[p_.readout_b().offset] += d_out;
  backward(t, de, grad);
}

}  // namespace dpl
