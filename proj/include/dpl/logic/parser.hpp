#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dpl/logic/goal.hpp"
#include "dpl/logic/program.hpp"

namespace dpl {

/// Parses program text: clauses `Head :- B1, ..., Bm.` and facts `Head.`,
/// `%` line comments, lowercase names for constants/functors/predicates,
/// uppercase or `_` names for variables, integers, `$name` subsymbolic
/// placeholders, list syntax, and the infix arithmetic/comparison operators
/// used by the evaluable built-ins.
Program parse_program(std::string_view text,
                      std::shared_ptr<SymbolTable> symbols = std::make_shared<SymbolTable>());

/// Parses a comma-separated atom list against the program's symbols. Empty
/// text is the True goal. Predicates unknown to the program are allowed and
/// reported through `warnings` when given. Query variables are numbered
/// 0..k-1 by first occurrence; their names are written to `var_names`.
Goal parse_query(std::string_view text, const Program& program,
                 std::vector<std::string>* warnings = nullptr,
                 std::vector<std::string>* var_names = nullptr);

std::string to_string(const Term& t, const SymbolTable& symbols);
std::string to_string(const Atom& a, const SymbolTable& symbols);
std::string to_string(const Clause& c, const SymbolTable& symbols);
std::string to_string(const Goal& g, const SymbolTable& symbols);
std::string to_string(const Substitution& s, const SymbolTable& symbols);
/// Program text that parses back to a structurally equal program.
std::string to_string(const Program& p);

}  // namespace dpl
