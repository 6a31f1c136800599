#include <cctype>

#include "lexer.hpp"

namespace hbdpt::detail {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\'';
}
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t pos) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

} // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](Tok k, std::size_t len) {
    out.push_back({k, std::string(text.substr(i, len)), i, i + len});
    i += len;
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && ident_char(text[j])) ++j;
      push(Tok::Ident, j - i);
      continue;
    }
    if (digit(c)) {
      std::size_t j = i;
      while (j < text.size() && digit(text[j])) ++j;
      if (j + 1 < text.size() && text[j] == '.' && digit(text[j + 1])) {
        ++j;
        while (j < text.size() && digit(text[j])) ++j;
      } else if (j + 1 < text.size() && text[j] == '/' && digit(text[j + 1])) {
        ++j;
        while (j < text.size() && digit(text[j])) ++j;
      }
      push(Tok::Number, j - i);
      continue;
    }
    auto two = text.substr(i, 2);
    if (two == "->") { push(Tok::Arrow, 2); continue; }
    if (two == "||") { push(Tok::ParBar, 2); continue; }
    if (two == "!=") { push(Tok::Neq, 2); continue; }
    if (two == "<=") { push(Tok::Le, 2); continue; }
    if (two == ">=") { push(Tok::Ge, 2); continue; }
    if (two == "=>") { push(Tok::Implies, 2); continue; }
    switch (c) {
    case '(': push(Tok::LParen, 1); continue;
    case ')': push(Tok::RParen, 1); continue;
    case '[': push(Tok::LBracket, 1); continue;
    case ']': push(Tok::RBracket, 1); continue;
    case '{': push(Tok::LBrace, 1); continue;
    case '}': push(Tok::RBrace, 1); continue;
    case ',': push(Tok::Comma, 1); continue;
    case ':': push(Tok::Colon, 1); continue;
    case ';': push(Tok::Semi, 1); continue;
    case '.': push(Tok::Dot, 1); continue;
    case '&': push(Tok::Amp, 1); continue;
    case '|': push(Tok::Bar, 1); continue;
    case '!': push(Tok::Bang, 1); continue;
    case '=': push(Tok::Eq, 1); continue;
    case '<': push(Tok::Lt, 1); continue;
    case '>': push(Tok::Gt, 1); continue;
    case '+': push(Tok::Plus, 1); continue;
    case '-': push(Tok::Minus, 1); continue;
    case '*': push(Tok::Star, 1); continue;
    case '/': push(Tok::Slash, 1); continue;
    default: break;
    }
    auto [line, col] = line_col(text, i);
    throw Error(ErrorCode::SyntaxError, "unexpected character '" + std::string(1, c) + "' at line " +
                                            std::to_string(line) + ", column " + std::to_string(col));
  }
  out.push_back({Tok::End, "", text.size(), text.size()});
  return out;
}

Parser::Parser(std::string_view text) : text_(text), toks_(tokenize(text)) {}

const Token &Parser::peek(std::size_t k) const {
  std::size_t j = std::min(i_ + k, toks_.size() - 1);
  return toks_[j];
}

Token Parser::next() {
  Token t = peek();
  if (i_ < toks_.size() - 1) ++i_;
  return t;
}

bool Parser::accept(Tok k) {
  if (peek().kind != k) return false;
  next();
  return true;
}

Token Parser::expect(Tok k, std::string_view what) {
  if (peek().kind != k) fail(peek(), "expected " + std::string(what));
  return next();
}

void Parser::fail(const Token &at, const std::string &msg) const {
  auto [line, col] = line_col(text_, at.pos);
  std::string found = at.kind == Tok::End ? "end of input" : "'" + at.text + "'";
  throw Error(ErrorCode::SyntaxError,
              msg + ", found " + found + " at line " + std::to_string(line) + ", column " + std::to_string(col));
}

bool Parser::glued_paren(std::size_t k) const {
  const Token &a = peek(k);
  const Token &b = peek(k + 1);
  return b.kind == Tok::LParen && b.pos == a.end;
}

Sort Parser::parse_sort_name() {
  Token t = expect(Tok::Ident, "a sort name");
  std::string name = t.text;
  // `Real.` swallowed the quantifier dot.
  bool dot = !name.empty() && name.back() == '.';
  if (dot) name.pop_back();
  auto s = parse_sort(name);
  if (!s) fail(t, "unknown sort '" + name + "'");
  if (dot) {
    // Re-inject the dot by stepping back is not possible; mark it consumed.
    toks_.insert(toks_.begin() + static_cast<std::ptrdiff_t>(i_), Token{Tok::Dot, ".", t.end - 1, t.end});
  }
  return *s;
}

Expr Parser::parse_expr(const std::map<std::string, Sort> &scope) {
  scopes_.clear();
  scopes_.push_back(scope);
  return parse_implies();
}

Expr Parser::lookup(const Token &ident) {
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
    auto f = it->find(ident.text);
    if (f != it->end()) return ex::var(ident.text, f->second);
  }
  auto [line, col] = line_col(text_, ident.pos);
  throw Error(ErrorCode::UnknownVariable, "'" + ident.text + "' at line " + std::to_string(line) + ", column " +
                                              std::to_string(col));
}

Expr Parser::parse_implies() {
  Expr lhs = parse_or();
  if (accept(Tok::Implies)) return ex::implies(lhs, parse_implies());
  return lhs;
}

Expr Parser::parse_or() {
  Expr e = parse_and();
  while (accept(Tok::Bar)) e = ex::lor(e, parse_and());
  return e;
}

Expr Parser::parse_and() {
  Expr e = parse_not();
  while (accept(Tok::Amp)) e = ex::land(e, parse_not());
  return e;
}

Expr Parser::parse_not() {
  if (accept(Tok::Bang)) return ex::lnot(parse_not());
  return parse_compare();
}

Expr Parser::parse_compare() {
  Expr lhs = parse_additive();
  switch (peek().kind) {
  case Tok::Eq: next(); return ex::eq(lhs, parse_additive());
  case Tok::Neq: next(); return ex::neq(lhs, parse_additive());
  case Tok::Lt: next(); return ex::lt(lhs, parse_additive());
  case Tok::Le: next(); return ex::le(lhs, parse_additive());
  case Tok::Gt: next(); return ex::gt(lhs, parse_additive());
  case Tok::Ge: next(); return ex::ge(lhs, parse_additive());
  default: return lhs;
  }
}

Expr Parser::parse_additive() {
  Expr e = parse_multiplicative();
  for (;;) {
    if (accept(Tok::Plus))
      e = ex::add(e, parse_multiplicative());
    else if (accept(Tok::Minus))
      e = ex::sub(e, parse_multiplicative());
    else
      return e;
  }
}

Expr Parser::parse_multiplicative() {
  Expr e = parse_unary();
  for (;;) {
    if (accept(Tok::Star))
      e = ex::mul(e, parse_unary());
    else if (accept(Tok::Slash))
      e = ex::div(e, parse_unary());
    else
      return e;
  }
}

Expr Parser::parse_unary() {
  if (peek().kind == Tok::Minus) {
    Token minus = next();
    if (peek().kind == Tok::Number && peek().pos == minus.end) {
      Token n = next();
      return ex::num(Rational(-parse_rational(n.text)));
    }
    return ex::neg(parse_unary());
  }
  return parse_atom();
}

Expr Parser::parse_atom() {
  const Token &t = peek();
  switch (t.kind) {
  case Tok::Number: {
    Token n = next();
    return ex::num(parse_rational(n.text));
  }
  case Tok::LParen: {
    next();
    if (accept(Tok::RParen)) return ex::unit();
    Expr e = parse_implies();
    expect(Tok::RParen, "')'");
    return e;
  }
  case Tok::Ident: {
    if (t.text == "true") {
      next();
      return ex::tru();
    }
    if (t.text == "false") {
      next();
      return ex::fls();
    }
    if (t.text == "ite" && peek(1).kind == Tok::LParen) {
      next();
      next();
      Expr c = parse_implies();
      expect(Tok::Comma, "','");
      Expr a = parse_implies();
      expect(Tok::Comma, "','");
      Expr b = parse_implies();
      expect(Tok::RParen, "')'");
      return ex::ite(c, a, b);
    }
    if (t.text == "exists" || t.text == "forall") {
      bool is_exists = t.text == "exists";
      next();
      Token v = expect(Tok::Ident, "a bound variable");
      expect(Tok::Colon, "':' before the bound variable's sort");
      Sort s = parse_sort_name();
      expect(Tok::Dot, "'.' after the bound variable");
      scopes_.push_back({{v.text, s}});
      Expr body = parse_implies();
      scopes_.pop_back();
      Var bound{v.text, s};
      return is_exists ? ex::exists(bound, body) : ex::forall(bound, body);
    }
    Token id = next();
    return lookup(id);
  }
  default:
    fail(t, "expected an expression");
  }
}

} // namespace hbdpt::detail

namespace hbdpt {

Expr parse_expr(std::string_view text, const std::map<std::string, Sort> &scope) {
  detail::Parser p(text);
  Expr e = p.parse_expr(scope);
  if (!p.at_end()) p.fail(p.peek(), "unexpected trailing input");
  return e;
}

} // namespace hbdpt
