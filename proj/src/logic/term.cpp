#include "dpl/logic/term.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace dpl {

Term Term::compound(SymbolId functor, std::vector<Term> args) {
  if (args.empty()) throw std::invalid_argument("compound term needs at least one argument");
  Term t(TermKind::Compound, functor);
  t.args_ = std::move(args);
  return t;
}

bool Term::is_ground() const {
  if (kind_ == TermKind::Variable) return false;
  return std::all_of(args_.begin(), args_.end(), [](const Term& a) { return a.is_ground(); });
}

bool Term::contains_var(VarId v) const {
  if (kind_ == TermKind::Variable) return id_ == v;
  return std::any_of(args_.begin(), args_.end(), [v](const Term& a) { return a.contains_var(v); });
}

bool Atom::is_ground() const {
  return std::all_of(args.begin(), args.end(), [](const Term& a) { return a.is_ground(); });
}

namespace {
constexpr std::array<const char*, sym::kReservedCount> kReservedNames = {
    "[]", ".", "is", "=:=", "=\\=", "<", ">", "=<", ">=", "=", "between", "+", "-", "*", "//", "mod"};
}

SymbolTable::SymbolTable() {
  for (const char* n : kReservedNames) intern(n);
}

SymbolId SymbolTable::intern(std::string_view name) {
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  auto id = static_cast<SymbolId>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<SymbolId> SymbolTable::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

PayloadId SymbolTable::intern_payload(std::string_view name) {
  std::string key(name);
  if (auto it = payload_ids_.find(key); it != payload_ids_.end()) return it->second;
  auto id = static_cast<PayloadId>(payload_names_.size());
  payload_names_.push_back(key);
  payload_ids_.emplace(std::move(key), id);
  return id;
}

std::optional<PayloadId> SymbolTable::find_payload(std::string_view name) const {
  if (auto it = payload_ids_.find(std::string(name)); it != payload_ids_.end()) return it->second;
  return std::nullopt;
}

bool SymbolTable::is_builtin_predicate(SymbolId s, std::size_t arity) const {
  if (s == sym::kBetween) return arity == 3;
  return s >= sym::kIs && s <= sym::kUnify && arity == 2;
}

const Term* Substitution::lookup(VarId v) const {
  auto it = bindings_.find(v);
  return it == bindings_.end() ? nullptr : &it->second;
}

}  // namespace dpl
