#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dpl/logic/term.hpp"

namespace dpl {

using GoalKey = std::vector<std::int64_t>;

/// An ordered conjunction of atoms, or one of the two terminals.
///
/// Atoms keep their raw variable ids so answer substitutions can be tracked
/// along a derivation. Equality and hashing go through a canonical key in
/// which variables are numbered by first occurrence, left to right, so two
/// goals that differ only by a consistent renaming compare equal.
class Goal {
 public:
  Goal() : Goal(std::vector<Atom>{}) {}
  explicit Goal(std::vector<Atom> atoms);

  static Goal truth() { return Goal(); }
  static Goal failure();

  bool is_true() const { return !failed_ && atoms_.empty(); }
  bool is_false() const { return failed_; }
  bool is_terminal() const { return failed_ || atoms_.empty(); }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& leftmost() const { return atoms_.front(); }
  std::size_t size() const { return atoms_.size(); }

  const GoalKey& key() const { return key_; }
  std::size_t hash() const { return hash_; }

  /// Raw variable ids in canonical (first-occurrence) order.
  std::vector<VarId> variables() const;
  /// One past the largest raw variable id, or 0 for a ground goal.
  VarId next_free_var() const { return next_free_; }

  friend bool operator==(const Goal& a, const Goal& b) {
    return a.hash_ == b.hash_ && a.failed_ == b.failed_ && a.key_ == b.key_;
  }

 private:
  void canonicalize();

  std::vector<Atom> atoms_;
  bool failed_ = false;
  GoalKey key_;
  std::size_t hash_ = 0;
  VarId next_free_ = 0;
};

struct GoalHash {
  std::size_t operator()(const Goal& g) const { return g.hash(); }
};

std::size_t hash_key(const GoalKey& key);

/// Appends the canonical encoding of a term to `out`, assigning slots to
/// unseen variables through `slots` (raw id -> slot).
void encode_term(const Term& t, std::vector<std::pair<VarId, std::int64_t>>& slots, GoalKey& out);

}  // namespace dpl
