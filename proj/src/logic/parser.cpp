#include "dpl/logic/parser.hpp"

#include <cctype>
#include <charconv>
#include <sstream>
#include <unordered_map>

namespace dpl {

namespace {

enum class Tok { Name, QuotedName, Var, Int, Payload, LParen, RParen, LBracket, RBracket, Bar, Comma, End, Neck, Op, Eof };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

bool is_symbol_char(char c) {
  switch (c) {
    case '+': case '-': case '*': case '/': case '\\': case '<': case '>': case '=': case ':':
      return true;
    default:
      return false;
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t{Tok::Eof, {}, line_, col_};
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (std::islower(static_cast<unsigned char>(c))) {
        t.kind = Tok::Name;
        t.text = take_ident();
      } else if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Var;
        t.text = take_ident();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Int;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) t.text += advance();
      } else if (c == '$') {
        advance();
        if (pos_ >= text_.size() || !(std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
          throw ParseError("expected a name after '$'", t.line, t.column);
        t.kind = Tok::Payload;
        t.text = take_ident();
      } else if (c == '\'') {
        advance();
        t.kind = Tok::QuotedName;
        for (;;) {
          if (pos_ >= text_.size()) throw ParseError("unterminated quoted name", t.line, t.column);
          char q = advance();
          if (q == '\'') {
            if (pos_ < text_.size() && text_[pos_] == '\'') {
              t.text += advance();
              continue;
            }
            break;
          }
          if (q == '\\' && pos_ < text_.size()) q = advance();
          t.text += q;
        }
      } else if (c == '(') {
        advance();
        t.kind = Tok::LParen;
      } else if (c == ')') {
        advance();
        t.kind = Tok::RParen;
      } else if (c == '[') {
        advance();
        t.kind = Tok::LBracket;
      } else if (c == ']') {
        advance();
        t.kind = Tok::RBracket;
      } else if (c == '|') {
        advance();
        t.kind = Tok::Bar;
      } else if (c == ',') {
        advance();
        t.kind = Tok::Comma;
      } else if (c == '.') {
        advance();
        t.kind = Tok::End;
      } else if (is_symbol_char(c)) {
        while (pos_ < text_.size() && is_symbol_char(text_[pos_])) t.text += advance();
        t.kind = t.text == ":-" ? Tok::Neck : Tok::Op;
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.column);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string take_ident() {
    std::string s;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      s += advance();
    return s;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct InfixOp {
  SymbolId symbol;
  int precedence;
  bool left_assoc;  // yfx; otherwise xfx
};

std::optional<InfixOp> infix_op(const Token& t) {
  static const std::unordered_map<std::string, InfixOp> ops = {
      {"is", {sym::kIs, 700, false}},      {"=:=", {sym::kArithEq, 700, false}},
      {"=\\=", {sym::kArithNe, 700, false}}, {"<", {sym::kLt, 700, false}},
      {">", {sym::kGt, 700, false}},        {"=<", {sym::kLe, 700, false}},
      {">=", {sym::kGe, 700, false}},       {"=", {sym::kUnify, 700, false}},
      {"+", {sym::kPlus, 500, true}},       {"-", {sym::kMinus, 500, true}},
      {"*", {sym::kTimes, 400, true}},      {"//", {sym::kIntDiv, 400, true}},
      {"mod", {sym::kMod, 400, true}},
  };
  if (t.kind != Tok::Op && t.kind != Tok::Name) return std::nullopt;
  if (auto it = ops.find(t.text); it != ops.end()) return it->second;
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, SymbolTable& symbols, Signature* sig, std::vector<std::string>* var_names)
      : toks_(std::move(tokens)), symbols_(symbols), sig_(sig), var_names_(var_names) {}

  bool at_eof() const { return peek().kind == Tok::Eof; }

  std::pair<Atom, std::vector<Atom>> clause() {
    vars_.clear();
    next_var_ = 0;
    const Token& start = peek();
    Atom head = atom();
    if (symbols_.is_builtin_predicate(head.predicate, head.arity()))
      throw ParseError("cannot define built-in predicate '" + symbols_.name(head.predicate) + "'", start.line,
                       start.column);
    std::vector<Atom> body;
    if (peek().kind == Tok::Neck) {
      next();
      body = atom_list();
    }
    expect(Tok::End, "'.'");
    return {std::move(head), std::move(body)};
  }

  std::vector<Atom> query() {
    vars_.clear();
    next_var_ = 0;
    if (at_eof()) return {};
    auto atoms = atom_list();
    if (peek().kind == Tok::End) next();
    if (!at_eof()) fail("unexpected trailing input");
    if (var_names_) {
      var_names_->assign(static_cast<std::size_t>(next_var_), std::string());
      for (const auto& [name, id] : vars_) (*var_names_)[static_cast<std::size_t>(id)] = name;
    }
    return atoms;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().column); }

  void expect(Tok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what);
    next();
  }

  std::vector<Atom> atom_list() {
    std::vector<Atom> atoms;
    atoms.push_back(atom());
    while (peek().kind == Tok::Comma) {
      next();
      atoms.push_back(atom());
    }
    return atoms;
  }

  Atom atom() {
    const Token& start = peek();
    Term t = expr(1200);
    Atom a;
    if (t.kind() == TermKind::Constant) {
      a.predicate = t.symbol();
    } else if (t.kind() == TermKind::Compound) {
      a.predicate = t.symbol();
      a.args.assign(t.args().begin(), t.args().end());
    } else {
      throw ParseError("expected an atom", start.line, start.column);
    }
    if (sig_) {
      try {
        sig_->declare_predicate(symbols_, a.predicate, a.arity());
      } catch (const ArityError& e) {
        throw ArityError(e, start.line, start.column);
      }
    }
    return a;
  }

  Term make_compound(SymbolId f, std::vector<Term> args, const Token& at) {
    if (sig_) {
      try {
        sig_->declare_functor(symbols_, f, args.size());
      } catch (const ArityError& e) {
        throw ArityError(e, at.line, at.column);
      }
    }
    return Term::compound(f, std::move(args));
  }

  Term expr(int max_prec) {
    Term left = primary();
    int left_prec = 0;
    for (;;) {
      const Token& t = peek();
      auto op = infix_op(t);
      if (!op || op->precedence > max_prec) break;
      if (!op->left_assoc && left_prec >= op->precedence) break;
      Token op_tok = next();
      int right_max = op->precedence - 1;
      Term right = expr(right_max);
      std::vector<Term> args;
      args.push_back(std::move(left));
      args.push_back(std::move(right));
      left = make_compound(op->symbol, std::move(args), op_tok);
      left_prec = op->precedence;
      if (!op->left_assoc) break;
    }
    return left;
  }

  Term primary() {
    Token t = next();
    switch (t.kind) {
      case Tok::Int:
        return Term::integer(parse_int(t));
      case Tok::Op:
        if (t.text == "-" && peek().kind == Tok::Int) return Term::integer(-parse_int(next()));
        break;
      case Tok::Var:
        return variable(t.text);
      case Tok::Payload:
        return Term::subsymbolic(symbols_.intern_payload(t.text));
      case Tok::LParen: {
        Term inner = expr(1200);
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::LBracket:
        return list(t);
      case Tok::Name:
      case Tok::QuotedName: {
        SymbolId s = symbols_.intern(t.text);
        if (peek().kind == Tok::LParen) {
          next();
          std::vector<Term> args;
          args.push_back(expr(999));
          while (peek().kind == Tok::Comma) {
            next();
            args.push_back(expr(999));
          }
          expect(Tok::RParen, "')'");
          return make_compound(s, std::move(args), t);
        }
        return Term::constant(s);
      }
      default:
        break;
    }
    throw ParseError("unexpected token '" + t.text + "'", t.line, t.column);
  }

  Term list(const Token& open) {
    if (peek().kind == Tok::RBracket) {
      next();
      return Term::constant(sym::kNil);
    }
    std::vector<Term> items;
    items.push_back(expr(999));
    while (peek().kind == Tok::Comma) {
      next();
      items.push_back(expr(999));
    }
    Term tail = Term::constant(sym::kNil);
    if (peek().kind == Tok::Bar) {
      next();
      tail = expr(999);
    }
    expect(Tok::RBracket, "']'");
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      std::vector<Term> args;
      args.push_back(std::move(*it));
      args.push_back(std::move(tail));
      tail = make_compound(sym::kCons, std::move(args), open);
    }
    return tail;
  }

  std::int64_t parse_int(const Token& t) const {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc()) throw ParseError("integer out of range", t.line, t.column);
    return v;
  }

  Term variable(const std::string& name) {
    if (name == "_") return Term::variable(next_var_++);
    if (auto it = vars_.find(name); it != vars_.end()) return Term::variable(it->second);
    VarId id = next_var_++;
    vars_.emplace(name, id);
    return Term::variable(id);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  SymbolTable& symbols_;
  Signature* sig_;
  std::vector<std::string>* var_names_;
  std::unordered_map<std::string, VarId> vars_;
  VarId next_var_ = 0;
};

bool plain_name(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::string quote_name(const std::string& s) {
  if (plain_name(s)) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

bool is_infix(SymbolId s) { return s >= sym::kIs && s <= sym::kMod && s != sym::kBetween; }

void print_term(std::ostream& os, const Term& t, const SymbolTable& symbols) {
  switch (t.kind()) {
    case TermKind::Constant:
      os << (t.symbol() == sym::kNil ? std::string("[]") : quote_name(symbols.name(t.symbol())));
      return;
    case TermKind::Integer:
      os << t.value();
      return;
    case TermKind::Variable:
      os << 'V' << t.var();
      return;
    case TermKind::Subsymbolic:
      os << '$' << symbols.payload_name(t.payload());
      return;
    case TermKind::Compound:
      break;
  }
  if (t.symbol() == sym::kCons && t.arity() == 2) {
    os << '[';
    const Term* cur = &t;
    bool first = true;
    while (cur->kind() == TermKind::Compound && cur->symbol() == sym::kCons && cur->arity() == 2) {
      if (!first) os << ',';
      print_term(os, cur->args()[0], symbols);
      first = false;
      cur = &cur->args()[1];
    }
    if (!(cur->kind() == TermKind::Constant && cur->symbol() == sym::kNil)) {
      os << '|';
      print_term(os, *cur, symbols);
    }
    os << ']';
    return;
  }
  if (is_infix(t.symbol()) && t.arity() == 2) {
    os << '(';
    print_term(os, t.args()[0], symbols);
    os << ' ' << symbols.name(t.symbol()) << ' ';
    print_term(os, t.args()[1], symbols);
    os << ')';
    return;
  }
  os << quote_name(symbols.name(t.symbol())) << '(';
  for (std::size_t i = 0; i < t.arity(); ++i) {
    if (i) os << ',';
    print_term(os, t.args()[i], symbols);
  }
  os << ')';
}

void print_atom(std::ostream& os, const Atom& a, const SymbolTable& symbols) {
  if (is_infix(a.predicate) && a.arity() == 2) {
    print_term(os, a.args[0], symbols);
    os << ' ' << symbols.name(a.predicate) << ' ';
    print_term(os, a.args[1], symbols);
    return;
  }
  os << quote_name(symbols.name(a.predicate));
  if (a.args.empty()) return;
  os << '(';
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (i) os << ',';
    print_term(os, a.args[i], symbols);
  }
  os << ')';
}

}  // namespace

Program parse_program(std::string_view text, std::shared_ptr<SymbolTable> symbols) {
  Signature sig;
  Parser parser(Lexer(text).run(), *symbols, &sig, nullptr);
  std::vector<Clause> clauses;
  while (!parser.at_eof()) {
    auto [head, body] = parser.clause();
    Clause c;
    c.id = static_cast<int>(clauses.size());
    c.head = std::move(head);
    c.body = std::move(body);
    clauses.push_back(std::move(c));
  }
  return Program(std::move(symbols), std::move(clauses), std::move(sig));
}

Goal parse_query(std::string_view text, const Program& program, std::vector<std::string>* warnings,
                 std::vector<std::string>* var_names) {
  Parser parser(Lexer(text).run(), program.symbols(), nullptr, var_names);
  auto atoms = parser.query();
  for (const Atom& a : atoms) {
    auto known = program.signature().predicate_arity(a.predicate);
    if (!known) {
      if (!program.symbols().is_builtin_predicate(a.predicate, a.arity()) && warnings)
        warnings->push_back("unknown predicate " + program.symbols().name(a.predicate) + "/" +
                            std::to_string(a.arity()));
    } else if (*known != a.arity()) {
      throw ArityError(program.symbols().name(a.predicate), *known, a.arity());
    }
  }
  return Goal(std::move(atoms));
}

std::string to_string(const Term& t, const SymbolTable& symbols) {
  std::ostringstream os;
  print_term(os, t, symbols);
  return os.str();
}

std::string to_string(const Atom& a, const SymbolTable& symbols) {
  std::ostringstream os;
  print_atom(os, a, symbols);
  return os.str();
}

std::string to_string(const Clause& c, const SymbolTable& symbols) {
  std::ostringstream os;
  print_atom(os, c.head, symbols);
  if (!c.body.empty()) {
    os << " :- ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i) os << ", ";
      print_atom(os, c.body[i], symbols);
    }
  }
  os << '.';
  return os.str();
}

std::string to_string(const Goal& g, const SymbolTable& symbols) {
  if (g.is_false()) return "False";
  if (g.is_true()) return "True";
  std::ostringstream os;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) os << ", ";
    print_atom(os, g.atoms()[i], symbols);
  }
  return os.str();
}

std::string to_string(const Substitution& s, const SymbolTable& symbols) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [v, t] : s.bindings()) {
    if (!first) os << ", ";
    first = false;
    os << 'V' << v << '/';
    print_term(os, t, symbols);
  }
  os << '}';
  return os.str();
}

std::string to_string(const Program& p) {
  std::ostringstream os;
  for (const Clause& c : p.clauses()) os << to_string(c, p.symbols()) << '\n';
  return os.str();
}

}  // namespace dpl
