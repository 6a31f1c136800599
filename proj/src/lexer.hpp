#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hbdpt/expr.hpp"

namespace hbdpt::detail {

enum class Tok {
  Ident,
  Number,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Comma,
  Colon,
  Semi,
  Dot,
  Arrow,    // ->
  ParBar,   // ||
  Amp,      // &
  Bar,      // |
  Bang,     // !
  Eq,       // =
  Neq,      // !=
  Lt,
  Le,
  Gt,
  Ge,
  Implies,  // =>
  Plus,
  Minus,
  Star,
  Slash,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos = 0;  // byte offset of the first character
  std::size_t end = 0;  // one past the last character
};

/// Splits text into tokens. Identifiers may contain `.` and `'` after the
/// first character; `n/d` without spaces is a single rational literal.
std::vector<Token> tokenize(std::string_view text);

/// Recursive-descent parser over a token vector; shared by the expression
/// and CPT text grammars.
class Parser {
public:
  explicit Parser(std::string_view text);

  const Token &peek(std::size_t k = 0) const;
  Token next();
  bool accept(Tok k);
  Token expect(Tok k, std::string_view what);
  bool at_end() const { return peek().kind == Tok::End; }
  [[noreturn]] void fail(const Token &at, const std::string &msg) const;
  /// True when the identifier token is immediately followed (no space) by `(`.
  bool glued_paren(std::size_t k = 0) const;

  Expr parse_expr(const std::map<std::string, Sort> &scope);
  Sort parse_sort_name();

  std::string_view source() const { return text_; }

private:
  Expr parse_implies();
  Expr parse_or();
  Expr parse_and();
  Expr parse_not();
  Expr parse_compare();
  Expr parse_additive();
  Expr parse_multiplicative();
  Expr parse_unary();
  Expr parse_atom();
  Expr lookup(const Token &ident);

  std::string text_;
  std::vector<Token> toks_;
  std::size_t i_ = 0;
  std::vector<std::map<std::string, Sort>> scopes_;
};

} // namespace hbdpt::detail
