#include <random>

#include "doctest.h"
#include "dpl/logic/parser.hpp"
#include "dpl/logic/unify.hpp"

using namespace dpl;

namespace {

Atom atom_of(const Program& p, const std::string& text) { return parse_query(text, p).leftmost(); }

// Random term over a small pool: constants a..c, variables 0..3, f/1, g/2.
Term random_term(std::mt19937_64& rng, const std::vector<SymbolId>& consts, SymbolId f, SymbolId g, int depth,
                 VarId var_base) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 4 : 1);
  switch (pick(rng)) {
    case 0: return Term::constant(consts[rng() % consts.size()]);
    case 1: return Term::variable(var_base + static_cast<VarId>(rng() % 4));
    case 2: return Term::compound(f, {random_term(rng, consts, f, g, depth - 1, var_base)});
    default:
      return Term::compound(g, {random_term(rng, consts, f, g, depth - 1, var_base),
                                random_term(rng, consts, f, g, depth - 1, var_base)});
  }
}

// Grounds every variable of `t` from `ground` (var -> term); missing vars stay.
Term instantiate(const Term& t, const std::map<VarId, Term>& ground) {
  Substitution s;
  for (const auto& [v, g] : ground) s.bind(v, g);
  return apply(t, s);
}

void collect_vars(const Term& t, std::vector<VarId>& out) {
  if (t.is_var()) {
    if (std::find(out.begin(), out.end(), t.var()) == out.end()) out.push_back(t.var());
    return;
  }
  for (const Term& a : t.args()) collect_vars(a, out);
}

}  // namespace

TEST_CASE("parse_program: facts and index") {
  Program p = parse_program("p(a). p(b).");
  CHECK(p.size() == 2);
  auto pid = p.symbols().find("p");
  REQUIRE(pid);
  auto idx = p.clauses_for(*pid);
  CHECK(std::vector<int>(idx.begin(), idx.end()) == std::vector<int>{0, 1});
  CHECK(p.signature().predicate_arity(*pid) == 1);
}

TEST_CASE("parse_program: recursive rule") {
  Program p = parse_program("locIn(X,Y) :- neighOf(X,Z), locIn(Z,Y).");
  REQUIRE(p.size() == 1);
  const Clause& c = p.clause(0);
  CHECK(p.symbols().name(c.head.predicate) == "locIn");
  CHECK(c.head.arity() == 2);
  CHECK(c.body.size() == 2);
  // Z is shared by both body atoms, X and Y by head and body.
  CHECK(c.body[0].args[1] == c.body[1].args[0]);
  CHECK(c.head.args[0] == c.body[0].args[0]);
}

TEST_CASE("parse_program: arity conflict") {
  CHECK_THROWS_AS(parse_program("p(a,b). p(c)."), ArityError);
  try {
    parse_program("p(a,b). p(c).");
  } catch (const ArityError& e) {
    CHECK(e.symbol() == "p");
  }
}

TEST_CASE("parse_program: syntax errors carry position") {
  try {
    parse_program("p(a).\nq(b :- r.");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 0);
  }
  CHECK_THROWS_AS(parse_program("p(a)"), ParseError);
}

TEST_CASE("parse_program: comments, integers, payloads, operators") {
  Program p = parse_program(
      "% header\n"
      "d($img1, 3).\n"
      "s(X, Y, Z) :- Z is X + Y * 2, Z >= 0, Z mod 10 =:= Y // 1.\n");
  CHECK(p.size() == 2);
  const Clause& fact = p.clause(0);
  CHECK(fact.head.args[0].kind() == TermKind::Subsymbolic);
  CHECK(fact.head.args[1].kind() == TermKind::Integer);
  CHECK(fact.head.args[1].value() == 3);
  CHECK(p.clause(1).body.size() == 3);
  CHECK(p.clause(1).body[0].predicate == sym::kIs);
}

TEST_CASE("parse_query") {
  Program p = parse_program("locIn(X,Y) :- neighOf(X,Z), locIn(Z,Y). neighOf(it,fr).");
  Goal g = parse_query("locIn(it,eu)", p);
  CHECK(g.size() == 1);
  CHECK(g.leftmost().is_ground());

  CHECK(parse_query("", p).is_true());

  std::vector<std::string> names;
  Goal g2 = parse_query("neighOf(it,Y), locIn(Y,eu)", p, nullptr, &names);
  CHECK(g2.size() == 2);
  CHECK(g2.atoms()[0].args[1] == g2.atoms()[1].args[0]);
  CHECK(names == std::vector<std::string>{"Y"});

  std::vector<std::string> warnings;
  Goal g3 = parse_query("fresh(a)", p, &warnings);
  CHECK(g3.size() == 1);
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(parse_query("locIn(it)", p), ArityError);
  CHECK_THROWS_AS(parse_query("locIn(it,", p), ParseError);
}

TEST_CASE("unify: examples") {
  Program p = parse_program("locatedIn(italy, europe). q(a). p(a).");
  // Parsed separately, X and Y would both be var 0; share one query instead.
  Atom a1 = atom_of(p, "locatedIn(X, europe)");
  Atom a2 = parse_query("locatedIn(W, X), locatedIn(italy, Y)", p).atoms()[1];
  auto mgu = unify(a1, a2);
  REQUIRE(mgu);
  CHECK(mgu->size() == 2);
  CHECK(to_string(apply(a1, *mgu), p.symbols()) == "locatedIn(italy,europe)");
  CHECK(apply(a1, *mgu) == apply(a2, *mgu));

  auto same = unify(atom_of(p, "p(a)"), atom_of(p, "p(a)"));
  REQUIRE(same);
  CHECK(same->empty());
  CHECK_FALSE(unify(atom_of(p, "p(a)"), atom_of(p, "q(a)")));
  CHECK_FALSE(unify(atom_of(p, "p(a)"), parse_query("p(b)", p).leftmost()));
}

TEST_CASE("unify: occurs check") {
  Program p = parse_program("p(f(a)).");
  Goal g = parse_query("p(X), p(f(X))", p);
  Atom a = g.atoms()[0], b = g.atoms()[1];
  CHECK(unify(a, b, {.occurs_check = true}) == std::nullopt);
  CHECK(unify(a, b, {.occurs_check = false}).has_value());
}

TEST_CASE("unify: subsymbolic terms") {
  Program p = parse_program("d($a). d($b).");
  Term pa = p.clause(0).head.args[0];
  Term pb = p.clause(1).head.args[0];
  CHECK(unify(pa, pa));
  CHECK_FALSE(unify(pa, pb));
  CHECK(unify(pa, Term::variable(7)));
  CHECK_FALSE(unify(pa, Term::constant(p.symbols().intern("a"))));
}

TEST_CASE("apply_subst") {
  Program p = parse_program("locatedIn(italy, europe). p(a,b).");
  SymbolId italy = *p.symbols().find("italy");
  Goal g = parse_query("locatedIn(X, europe)", p);
  Substitution s;
  s.bind(g.variables()[0], Term::constant(italy));
  CHECK(to_string(apply(g, s), p.symbols()) == "locatedIn(italy,europe)");
  CHECK(apply(g, Substitution{}) == g);

  Goal h = parse_query("p(X,Y)", p);
  auto vars = h.variables();
  Substitution s2;
  s2.bind(vars[0], Term::compound(p.symbols().intern("f"), {Term::variable(vars[1])}));
  Atom out = apply(h.leftmost(), s2);
  CHECK(out.args[0].is_compound());
  CHECK(out.args[0].args()[0] == Term::variable(vars[1]));
  CHECK(out.args[1] == Term::variable(vars[1]));
}

TEST_CASE("compose") {
  SymbolTable st;
  Term a = Term::constant(st.intern("a"));
  Substitution s1, s2;
  s1.bind(0, Term::variable(1));
  s2.bind(1, a);
  Substitution c = compose(s1, s2);
  CHECK(c.size() == 2);
  CHECK(*c.lookup(0) == a);
  CHECK(*c.lookup(1) == a);
  CHECK(compose(Substitution{}, s1) == s1);
  CHECK(compose(s1, Substitution{}) == s1);

  // apply(compose(s1, s2), t) == apply(s2, apply(s1, t)) on random terms.
  std::mt19937_64 rng(11);
  std::vector<SymbolId> consts{st.intern("a"), st.intern("b"), st.intern("c")};
  SymbolId f = st.intern("f"), g = st.intern("g");
  for (int trial = 0; trial < 300; ++trial) {
    Substitution x, y;
    for (VarId v = 0; v < 4; ++v) {
      if (rng() % 2) x.bind(v, random_term(rng, consts, f, g, 2, 4));
      if (rng() % 2) y.bind(v + 2, random_term(rng, consts, f, g, 2, 0));
    }
    Term t = random_term(rng, consts, f, g, 3, 0);
    CHECK(apply(t, compose(x, y)) == apply(apply(t, x), y));
  }
}

TEST_CASE("rename_apart") {
  Program p = parse_program("p(X) :- q(X). r(a).");
  VarCounter ctr{100};
  Clause c = rename_apart(p.clause(0), ctr);
  CHECK(c.head.args[0] == Term::variable(100));
  CHECK(c.body[0].args[0] == Term::variable(100));
  CHECK(ctr.next == 101);
  CHECK(c.id == 0);

  Clause fact = rename_apart(p.clause(1), ctr);
  CHECK(fact == p.clause(1));
  CHECK(ctr.next == 101);

  Clause c2 = rename_apart(p.clause(0), ctr);
  CHECK(c2.head.args[0] == Term::variable(101));
  CHECK_FALSE(c2.head.args[0] == c.head.args[0]);
}

TEST_CASE("property: MGU equalizes atoms instantiated from a shared template") {
  SymbolTable st;
  std::vector<SymbolId> consts{st.intern("a"), st.intern("b"), st.intern("c")};
  SymbolId f = st.intern("f"), g = st.intern("g"), p = st.intern("p");
  std::mt19937_64 rng(2024);
  int unified = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Term> tmpl;
    for (int i = 0; i < 3; ++i) tmpl.push_back(random_term(rng, consts, f, g, 2, 0));
    // Two partial instantiations of the template with disjoint variable ranges.
    auto inst = [&](VarId base) {
      std::map<VarId, Term> m;
      for (VarId v = 0; v < 4; ++v) {
        if (rng() % 2) m.emplace(v, random_term(rng, consts, f, g, 1, base));
        else m.emplace(v, Term::variable(base + v));
      }
      Atom a;
      a.predicate = p;
      for (const Term& t : tmpl) a.args.push_back(instantiate(t, m));
      return a;
    };
    Atom a1 = inst(10), a2 = inst(20);
    auto mgu = unify(a1, a2, {.occurs_check = true});
    if (!mgu) continue;  // instantiations may clash
    ++unified;
    CHECK(apply(a1, *mgu) == apply(a2, *mgu));
    // Idempotence.
    CHECK(apply(apply(a1, *mgu), *mgu) == apply(a1, *mgu));
  }
  CHECK(unified > 100);
}

TEST_CASE("property: every brute-force unifier factors through the MGU") {
  SymbolTable st;
  std::vector<SymbolId> consts{st.intern("a"), st.intern("b")};
  SymbolId f = st.intern("f"), g = st.intern("g"), p = st.intern("p");
  std::mt19937_64 rng(7);
  // Ground pool for brute force: constants and f(constant).
  std::vector<Term> pool;
  for (SymbolId c : consts) {
    pool.push_back(Term::constant(c));
    pool.push_back(Term::compound(f, {Term::constant(c)}));
  }
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Atom a1{p, {random_term(rng, consts, f, g, 1, 0), random_term(rng, consts, f, g, 1, 0)}};
    Atom a2{p, {random_term(rng, consts, f, g, 1, 2), random_term(rng, consts, f, g, 1, 2)}};
    std::vector<VarId> vars;
    for (const Term& t : a1.args) collect_vars(t, vars);
    for (const Term& t : a2.args) collect_vars(t, vars);
    if (vars.size() > 4) continue;
    auto mgu = unify(a1, a2, {.occurs_check = true});
    // Enumerate ground substitutions over the pool.
    std::size_t combos = 1;
    for (std::size_t i = 0; i < vars.size(); ++i) combos *= pool.size();
    bool any = false;
    for (std::size_t code = 0; code < combos; ++code) {
      Substitution sigma;
      std::size_t c = code;
      for (VarId v : vars) {
        sigma.bind(v, pool[c % pool.size()]);
        c /= pool.size();
      }
      if (!(apply(a1, sigma) == apply(a2, sigma))) continue;
      any = true;
      REQUIRE(mgu);
      // delta = sigma restricted to variables left free by the MGU.
      Substitution delta;
      for (VarId v : vars)
        if (!mgu->lookup(v)) delta.bind(v, *sigma.lookup(v));
      Substitution through = compose(*mgu, delta);
      for (VarId v : vars) CHECK(apply(Term::variable(v), through) == *sigma.lookup(v));
      ++checked;
    }
    if (!any && mgu) {
      // Unifiable but no ground witness in the pool is fine only if the MGU
      // forces terms outside it (e.g. nested g); nothing to check.
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("property: goal hash is invariant under variable renaming") {
  Program p = parse_program("p(a,b). q(b). r(X,Y,Z) :- p(X,Y), q(Z).");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Goal g = parse_query("r(X, f(Y, X), Z), p(Z, W), q(Y)", p);
    std::map<VarId, VarId> ren;
    Substitution s;
    VarId base = 50 + static_cast<VarId>(rng() % 1000);
    std::vector<VarId> vars = g.variables();
    std::shuffle(vars.begin(), vars.end(), rng);
    for (std::size_t i = 0; i < vars.size(); ++i) s.bind(vars[i], Term::variable(base + static_cast<VarId>(i) * 3));
    Goal h = apply(g, s);
    CHECK(h == g);
    CHECK(h.hash() == g.hash());
  }
  CHECK_FALSE(parse_query("p(X,Y)", p) == parse_query("p(X,X)", p));
  CHECK_FALSE(Goal::truth() == Goal::failure());
}

TEST_CASE("property: parse/print round trip") {
  const char* src =
      "locIn(X,Y) :- neighOf(X,Z), locIn(Z,Y).\n"
      "neighOf(it, fr).\n"
      "'Quoted name'(a, [1, 2, X | T]) :- X is 3 - -2 * (4 + 1), T = [].\n"
      "d($img_0, 7).\n"
      "cmp(A, B) :- A =< B, A =\\= 4, B mod 3 >= A // 2.\n";
  Program p = parse_program(src);
  std::string printed = to_string(p);
  Program q = parse_program(printed);
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(to_string(q.clause(static_cast<int>(i)), q.symbols()) ==
          to_string(p.clause(static_cast<int>(i)), p.symbols()));
    CHECK(q.clause(static_cast<int>(i)).id == p.clause(static_cast<int>(i)).id);
  }
  CHECK(to_string(q) == printed);
}
