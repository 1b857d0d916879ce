#include "dpl/logic/program.hpp"

#include <algorithm>

namespace dpl {

ParseError::ParseError(const std::string& msg, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

ArityError::ArityError(const std::string& symbol, std::size_t expected, std::size_t got)
    : std::runtime_error("arity conflict for '" + symbol + "': used with " + std::to_string(got) +
                         " arguments, previously " + std::to_string(expected)),
      symbol_(symbol),
      expected_(expected),
      got_(got) {}

ArityError::ArityError(const ArityError& e, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what()),
      symbol_(e.symbol_),
      expected_(e.expected_),
      got_(e.got_) {}

void Signature::declare_predicate(const SymbolTable& symbols, SymbolId p, std::size_t arity) {
  auto [it, inserted] = predicates_.emplace(p, arity);
  if (!inserted && it->second != arity) throw ArityError(symbols.name(p), it->second, arity);
  max_arity_ = std::max(max_arity_, arity);
}

void Signature::declare_functor(const SymbolTable& symbols, SymbolId f, std::size_t arity) {
  auto [it, inserted] = functors_.emplace(f, arity);
  if (!inserted && it->second != arity) throw ArityError(symbols.name(f), it->second, arity);
  max_arity_ = std::max(max_arity_, arity);
}

std::optional<std::size_t> Signature::predicate_arity(SymbolId p) const {
  if (auto it = predicates_.find(p); it != predicates_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::size_t> Signature::functor_arity(SymbolId f) const {
  if (auto it = functors_.find(f); it != functors_.end()) return it->second;
  return std::nullopt;
}

Program::Program() : symbols_(std::make_shared<SymbolTable>()) {}

Program::Program(std::shared_ptr<SymbolTable> symbols, std::vector<Clause> clauses, Signature signature)
    : symbols_(std::move(symbols)), signature_(std::move(signature)) {
  clauses_.reserve(clauses.size());
  for (auto& c : clauses) add_clause(std::move(c.head), std::move(c.body));
}

std::span<const int> Program::clauses_for(SymbolId p) const {
  if (auto it = index_.find(p); it != index_.end()) return it->second;
  return {};
}

namespace {
void declare_term(Signature& sig, const SymbolTable& symbols, const Term& t) {
  if (!t.is_compound()) return;
  sig.declare_functor(symbols, t.symbol(), t.arity());
  for (const Term& a : t.args()) declare_term(sig, symbols, a);
}

void declare_atom(Signature& sig, const SymbolTable& symbols, const Atom& a) {
  sig.declare_predicate(symbols, a.predicate, a.arity());
  for (const Term& t : a.args) declare_term(sig, symbols, t);
}
}  // namespace

int Program::add_clause(Atom head, std::vector<Atom> body) {
  declare_atom(signature_, *symbols_, head);
  for (const Atom& b : body) declare_atom(signature_, *symbols_, b);
  Clause c;
  c.id = static_cast<int>(clauses_.size());
  c.head = std::move(head);
  c.body = std::move(body);
  index_[c.head.predicate].push_back(c.id);
  clauses_.push_back(std::move(c));
  return clauses_.back().id;
}

}  // namespace dpl
