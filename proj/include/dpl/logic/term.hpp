#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dpl {

using SymbolId = std::int32_t;
using VarId = std::int64_t;
using PayloadId = std::int32_t;

enum class TermKind : std::uint8_t { Constant, Integer, Variable, Compound, Subsymbolic };

/// A first-order term. Integers are constants that carry their value so the
/// arithmetic built-ins can evaluate them without consulting a symbol table.
class Term {
 public:
  static Term constant(SymbolId s) { return Term(TermKind::Constant, s); }
  static Term integer(std::int64_t v) { return Term(TermKind::Integer, v); }
  static Term variable(VarId v) { return Term(TermKind::Variable, v); }
  static Term subsymbolic(PayloadId p) { return Term(TermKind::Subsymbolic, p); }
  static Term compound(SymbolId functor, std::vector<Term> args);

  TermKind kind() const { return kind_; }
  bool is_var() const { return kind_ == TermKind::Variable; }
  bool is_compound() const { return kind_ == TermKind::Compound; }

  SymbolId symbol() const { return static_cast<SymbolId>(id_); }  // constant or functor
  std::int64_t value() const { return id_; }                      // integer
  VarId var() const { return id_; }
  PayloadId payload() const { return static_cast<PayloadId>(id_); }
  std::span<const Term> args() const { return args_; }
  std::size_t arity() const { return args_.size(); }

  bool is_ground() const;
  bool contains_var(VarId v) const;

  friend bool operator==(const Term&, const Term&) = default;

 private:
  Term(TermKind k, std::int64_t id) : kind_(k), id_(id) {}

  TermKind kind_;
  std::int64_t id_;
  std::vector<Term> args_;
};

struct Atom {
  SymbolId predicate = 0;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }
  bool is_ground() const;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Clause {
  int id = 0;
  Atom head;
  std::vector<Atom> body;

  bool is_fact() const { return body.empty(); }
  friend bool operator==(const Clause&, const Clause&) = default;
};

/// Interned names. A fixed prefix of symbols is reserved for lists and the
/// evaluable built-ins so their ids are compile-time constants.
namespace sym {
inline constexpr SymbolId kNil = 0;      // []
inline constexpr SymbolId kCons = 1;     // '.'/2
inline constexpr SymbolId kIs = 2;
inline constexpr SymbolId kArithEq = 3;  // =:=
inline constexpr SymbolId kArithNe = 4;  // =\=
inline constexpr SymbolId kLt = 5;
inline constexpr SymbolId kGt = 6;
inline constexpr SymbolId kLe = 7;       // =<
inline constexpr SymbolId kGe = 8;
inline constexpr SymbolId kUnify = 9;    // =
inline constexpr SymbolId kBetween = 10;
inline constexpr SymbolId kPlus = 11;
inline constexpr SymbolId kMinus = 12;
inline constexpr SymbolId kTimes = 13;
inline constexpr SymbolId kIntDiv = 14;  // //
inline constexpr SymbolId kMod = 15;
inline constexpr SymbolId kReservedCount = 16;
}  // namespace sym

class SymbolTable {
 public:
  SymbolTable();

  SymbolId intern(std::string_view name);
  std::optional<SymbolId> find(std::string_view name) const;
  const std::string& name(SymbolId id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return names_.size(); }

  PayloadId intern_payload(std::string_view name);
  std::optional<PayloadId> find_payload(std::string_view name) const;
  const std::string& payload_name(PayloadId id) const {
    return payload_names_.at(static_cast<std::size_t>(id));
  }
  std::size_t payload_count() const { return payload_names_.size(); }

  bool is_builtin_predicate(SymbolId s, std::size_t arity) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, SymbolId> ids_;
  std::vector<std::string> payload_names_;
  std::unordered_map<std::string, PayloadId> payload_ids_;
};

/// Mapping var-id -> term. Kept normalized (idempotent) by the operations that
/// build it; ordered so printing and iteration are deterministic.
class Substitution {
 public:
  Substitution() = default;

  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }
  const Term* lookup(VarId v) const;
  void bind(VarId v, Term t) { bindings_.insert_or_assign(v, std::move(t)); }
  const std::map<VarId, Term>& bindings() const { return bindings_; }

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::map<VarId, Term> bindings_;
};

/// Monotone supply of fresh variable ids, owned per derivation.
struct VarCounter {
  VarId next = 0;
  VarId fresh() { return next++; }
};

}  // namespace dpl
