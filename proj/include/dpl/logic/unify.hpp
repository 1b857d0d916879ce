#pragma once

#include <optional>

#include "dpl/logic/goal.hpp"
#include "dpl/logic/term.hpp"

namespace dpl {

struct UnifyOptions {
  bool occurs_check = false;
};

/// Most general unifier, or nullopt on predicate/arity mismatch or clash.
/// The result is normalized: no bound variable occurs in any binding's term,
/// unless occurs-check is off and the inputs force a cyclic binding.
std::optional<Substitution> unify(const Atom& a, const Atom& b, UnifyOptions opts = {});
std::optional<Substitution> unify(const Term& a, const Term& b, UnifyOptions opts = {});

Term apply(const Term& t, const Substitution& theta);
Atom apply(const Atom& a, const Substitution& theta);
Goal apply(const Goal& g, const Substitution& theta);

/// apply(compose(a, b), t) == apply(b, apply(a, t)).
Substitution compose(const Substitution& first, const Substitution& second);

/// Copy of `c` whose variables are fresh ids drawn from `counter`, in order
/// of first occurrence (head, then body).
Clause rename_apart(const Clause& c, VarCounter& counter);

}  // namespace dpl
