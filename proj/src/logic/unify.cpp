#include "dpl/logic/unify.hpp"

#include <unordered_map>
#include <unordered_set>

namespace dpl {

namespace {

class Unifier {
 public:
  explicit Unifier(UnifyOptions opts) : opts_(opts) {}

  bool unify(const Term& a, const Term& b) {
    const Term& x = deref(a);
    const Term& y = deref(b);
    if (x.is_var() && y.is_var() && x.var() == y.var()) return true;
    if (x.is_var()) return bind(x.var(), y);
    if (y.is_var()) return bind(y.var(), x);
    if (x.kind() != y.kind()) return false;
    switch (x.kind()) {
      case TermKind::Constant:
        return x.symbol() == y.symbol();
      case TermKind::Integer:
        return x.value() == y.value();
      case TermKind::Subsymbolic:
        return x.payload() == y.payload();
      case TermKind::Compound: {
        if (x.symbol() != y.symbol() || x.arity() != y.arity()) return false;
        for (std::size_t i = 0; i < x.arity(); ++i)
          if (!unify(x.args()[i], y.args()[i])) return false;
        return true;
      }
      case TermKind::Variable:
        break;
    }
    return false;
  }

  Substitution result() {
    Substitution out;
    for (const auto& [v, t] : bindings_) {
      std::unordered_set<VarId> active{v};
      out.bind(v, resolve(t, active));
    }
    return out;
  }

 private:
  const Term& deref(const Term& t) const {
    const Term* cur = &t;
    while (cur->is_var()) {
      auto it = bindings_.find(cur->var());
      if (it == bindings_.end()) break;
      cur = &it->second;
    }
    return *cur;
  }

  bool occurs(VarId v, const Term& t) const {
    const Term& d = deref(t);
    if (d.is_var()) return d.var() == v;
    for (const Term& a : d.args())
      if (occurs(v, a)) return true;
    return false;
  }

  bool bind(VarId v, const Term& t) {
    if (opts_.occurs_check && occurs(v, t)) return false;
    bindings_.emplace(v, t);
    return true;
  }

  // Fully dereferences a bound term. Variables already being expanded on the
  // current path are left in place, which only happens for cyclic bindings
  // created with occurs-check disabled.
  Term resolve(const Term& t, std::unordered_set<VarId>& active) const {
    if (t.is_var()) {
      if (active.count(t.var())) return t;
      auto it = bindings_.find(t.var());
      if (it == bindings_.end()) return t;
      active.insert(t.var());
      Term r = resolve(it->second, active);
      active.erase(t.var());
      return r;
    }
    if (!t.is_compound()) return t;
    std::vector<Term> args;
    args.reserve(t.arity());
    for (const Term& a : t.args()) args.push_back(resolve(a, active));
    return Term::compound(t.symbol(), std::move(args));
  }

  UnifyOptions opts_;
  std::unordered_map<VarId, Term> bindings_;
};

void rename_term(const Term& t, std::unordered_map<VarId, VarId>& map, VarCounter& counter, Term& out) {
  if (t.is_var()) {
    auto it = map.find(t.var());
    if (it == map.end()) it = map.emplace(t.var(), counter.fresh()).first;
    out = Term::variable(it->second);
    return;
  }
  if (!t.is_compound()) {
    out = t;
    return;
  }
  std::vector<Term> args(t.arity(), Term::constant(0));
  for (std::size_t i = 0; i < t.arity(); ++i) rename_term(t.args()[i], map, counter, args[i]);
  out = Term::compound(t.symbol(), std::move(args));
}

Atom rename_atom(const Atom& a, std::unordered_map<VarId, VarId>& map, VarCounter& counter) {
  Atom out;
  out.predicate = a.predicate;
  out.args.assign(a.args.size(), Term::constant(0));
  for (std::size_t i = 0; i < a.args.size(); ++i) rename_term(a.args[i], map, counter, out.args[i]);
  return out;
}

}  // namespace

std::optional<Substitution> unify(const Term& a, const Term& b, UnifyOptions opts) {
  Unifier u(opts);
  if (!u.unify(a, b)) return std::nullopt;
  return u.result();
}

std::optional<Substitution> unify(const Atom& a, const Atom& b, UnifyOptions opts) {
  if (a.predicate != b.predicate || a.arity() != b.arity()) return std::nullopt;
  Unifier u(opts);
  for (std::size_t i = 0; i < a.arity(); ++i)
    if (!u.unify(a.args[i], b.args[i])) return std::nullopt;
  return u.result();
}

Term apply(const Term& t, const Substitution& theta) {
  if (t.is_var()) {
    const Term* b = theta.lookup(t.var());
    return b ? *b : t;
  }
  if (!t.is_compound() || t.is_ground()) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const Term& a : t.args()) args.push_back(apply(a, theta));
  return Term::compound(t.symbol(), std::move(args));
}

Atom apply(const Atom& a, const Substitution& theta) {
  Atom out;
  out.predicate = a.predicate;
  out.args.reserve(a.args.size());
  for (const Term& t : a.args) out.args.push_back(apply(t, theta));
  return out;
}

Goal apply(const Goal& g, const Substitution& theta) {
  if (g.is_terminal() || theta.empty()) return g;
  std::vector<Atom> atoms;
  atoms.reserve(g.size());
  for (const Atom& a : g.atoms()) atoms.push_back(apply(a, theta));
  return Goal(std::move(atoms));
}

Substitution compose(const Substitution& first, const Substitution& second) {
  Substitution out;
  for (const auto& [v, t] : first.bindings()) {
    Term r = apply(t, second);
    if (r.is_var() && r.var() == v) continue;
    out.bind(v, std::move(r));
  }
  for (const auto& [v, t] : second.bindings())
    if (!first.lookup(v)) out.bind(v, t);
  return out;
}

Clause rename_apart(const Clause& c, VarCounter& counter) {
  std::unordered_map<VarId, VarId> map;
  Clause out;
  out.id = c.id;
  out.head = rename_atom(c.head, map, counter);
  out.body.reserve(c.body.size());
  for (const Atom& b : c.body) out.body.push_back(rename_atom(b, map, counter));
  return out;
}

}  // namespace dpl
