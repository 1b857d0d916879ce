#include "dpl/logic/goal.hpp"

#include <algorithm>

namespace dpl {

namespace {

// Tags keep encodings of different term kinds from colliding.
constexpr std::int64_t kTagConst = -1;
constexpr std::int64_t kTagInt = -2;
constexpr std::int64_t kTagVar = -3;
constexpr std::int64_t kTagCompound = -4;
constexpr std::int64_t kTagPayload = -5;
constexpr std::int64_t kTagAtom = -6;
constexpr std::int64_t kTagFalse = -7;

void max_var(const Term& t, VarId& next) {
  if (t.is_var()) {
    next = std::max(next, t.var() + 1);
    return;
  }
  for (const Term& a : t.args()) max_var(a, next);
}

}  // namespace

void encode_term(const Term& t, std::vector<std::pair<VarId, std::int64_t>>& slots, GoalKey& out) {
  switch (t.kind()) {
    case TermKind::Constant:
      out.push_back(kTagConst);
      out.push_back(t.symbol());
      return;
    case TermKind::Integer:
      out.push_back(kTagInt);
      out.push_back(t.value());
      return;
    case TermKind::Subsymbolic:
      out.push_back(kTagPayload);
      out.push_back(t.payload());
      return;
    case TermKind::Variable: {
      auto it = std::find_if(slots.begin(), slots.end(), [&](const auto& s) { return s.first == t.var(); });
      std::int64_t slot = 0;
      if (it == slots.end()) {
        slot = static_cast<std::int64_t>(slots.size());
        slots.emplace_back(t.var(), slot);
      } else {
        slot = it->second;
      }
      out.push_back(kTagVar);
      out.push_back(slot);
      return;
    }
    case TermKind::Compound:
      out.push_back(kTagCompound);
      out.push_back(t.symbol());
      out.push_back(static_cast<std::int64_t>(t.arity()));
      for (const Term& a : t.args()) encode_term(a, slots, out);
      return;
  }
}

std::size_t hash_key(const GoalKey& key) {
  // FNV-1a over the 64-bit tokens.
  std::uint64_t h = 1469598103934665603ULL;
  for (std::int64_t v : key) {
    auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (u >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return static_cast<std::size_t>(h);
}

Goal::Goal(std::vector<Atom> atoms) : atoms_(std::move(atoms)) { canonicalize(); }

Goal Goal::failure() {
  Goal g;
  g.failed_ = true;
  g.canonicalize();
  return g;
}

void Goal::canonicalize() {
  key_.clear();
  next_free_ = 0;
  if (failed_) {
    key_.push_back(kTagFalse);
  } else {
    std::vector<std::pair<VarId, std::int64_t>> slots;
    for (const Atom& a : atoms_) {
      key_.push_back(kTagAtom);
      key_.push_back(a.predicate);
      key_.push_back(static_cast<std::int64_t>(a.arity()));
      for (const Term& t : a.args) {
        encode_term(t, slots, key_);
        max_var(t, next_free_);
      }
    }
  }
  hash_ = hash_key(key_);
}

std::vector<VarId> Goal::variables() const {
  std::vector<std::pair<VarId, std::int64_t>> slots;
  GoalKey scratch;
  for (const Atom& a : atoms_)
    for (const Term& t : a.args) encode_term(t, slots, scratch);
  std::vector<VarId> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.push_back(s.first);
  return out;
}

}  // namespace dpl
