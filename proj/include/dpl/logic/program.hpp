#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpl/logic/term.hpp"

namespace dpl {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ArityError : public std::runtime_error {
 public:
  ArityError(const std::string& symbol, std::size_t expected, std::size_t got);
  /// Same conflict, reported at a source position.
  ArityError(const ArityError& e, int line, int column);
  const std::string& symbol() const { return symbol_; }
  std::size_t expected() const { return expected_; }
  std::size_t got() const { return got_; }

 private:
  std::string symbol_;
  std::size_t expected_;
  std::size_t got_;
};

/// Arity registry shared by a program and the queries posed to it.
class Signature {
 public:
  /// Registers or checks the arity of a predicate; throws ArityError on conflict.
  void declare_predicate(const SymbolTable& symbols, SymbolId p, std::size_t arity);
  void declare_functor(const SymbolTable& symbols, SymbolId f, std::size_t arity);
  std::optional<std::size_t> predicate_arity(SymbolId p) const;
  std::optional<std::size_t> functor_arity(SymbolId f) const;
  std::size_t max_arity() const { return max_arity_; }

 private:
  std::unordered_map<SymbolId, std::size_t> predicates_;
  std::unordered_map<SymbolId, std::size_t> functors_;
  std::size_t max_arity_ = 0;
};

/// A definite logic program: clauses with dense ids in source order and a
/// per-predicate index over clause heads.
class Program {
 public:
  Program();
  Program(std::shared_ptr<SymbolTable> symbols, std::vector<Clause> clauses, Signature signature);

  const std::vector<Clause>& clauses() const { return clauses_; }
  const Clause& clause(int id) const { return clauses_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return clauses_.size(); }

  /// Clause ids (ascending) whose head predicate is `p`.
  std::span<const int> clauses_for(SymbolId p) const;

  SymbolTable& symbols() const { return *symbols_; }
  const std::shared_ptr<SymbolTable>& symbol_table() const { return symbols_; }
  const Signature& signature() const { return signature_; }

  /// Appends a clause (fresh dense id) and indexes it. Used when loading
  /// fact bases; throws ArityError on arity conflicts.
  int add_clause(Atom head, std::vector<Atom> body);

 private:
  std::shared_ptr<SymbolTable> symbols_;
  std::vector<Clause> clauses_;
  Signature signature_;
  std::unordered_map<SymbolId, std::vector<int>> index_;
};

}  // namespace dpl
