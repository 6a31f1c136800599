#include "hbdpt/expr.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <sstream>

namespace hbdpt {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::SortMismatch: return "SortMismatch";
  case ErrorCode::ArityMismatch: return "ArityMismatch";
  case ErrorCode::DivisionByZero: return "DivisionByZero";
  case ErrorCode::UnboundVariable: return "UnboundVariable";
  case ErrorCode::UnknownVariable: return "UnknownVariable";
  case ErrorCode::MissingParam: return "MissingParam";
  case ErrorCode::SyntaxError: return "SyntaxError";
  case ErrorCode::SchemaError: return "SchemaError";
  case ErrorCode::CycleError: return "CycleError";
  case ErrorCode::NoFeedbackVars: return "NoFeedbackVars";
  case ErrorCode::AlgebraicLoop: return "AlgebraicLoopError";
  case ErrorCode::BudgetExhausted: return "BudgetExhausted";
  case ErrorCode::UnresolvedRef: return "UnresolvedRef";
  case ErrorCode::SpaceTooLarge: return "SpaceTooLarge";
  case ErrorCode::SpaceMismatch: return "SpaceMismatch";
  case ErrorCode::PreconditionViolated: return "PreconditionViolated";
  case ErrorCode::UnsupportedBlock: return "UnsupportedBlock";
  case ErrorCode::ValidationFailed: return "ValidationFailed";
  }
  return "Error";
}

// ---------------------------------------------------------------------------
// Rationals and sorts

std::string rational_to_string(const Rational &q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw Error(ErrorCode::SyntaxError, "empty number");
  auto dot = s.find('.');
  try {
    if (dot != std::string::npos) {
      bool negative = s[0] == '-';
      std::string digits = s.substr(negative ? 1 : 0);
      dot = digits.find('.');
      std::string whole = digits.substr(0, dot);
      std::string frac = digits.substr(dot + 1);
      if (whole.empty()) whole = "0";
      if (frac.empty()) frac = "0";
      mpz_class num(whole + frac);
      mpz_class den;
      mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
      Rational q(num, den);
      q.canonicalize();
      return negative ? Rational(-q) : q;
    }
    Rational q(s);
    if (q.get_den() == 0) throw Error(ErrorCode::SyntaxError, "zero denominator in '" + s + "'");
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument &) {
    throw Error(ErrorCode::SyntaxError, "not a number: '" + s + "'");
  }
}

double rational_to_double(const Rational &q) { return q.get_d(); }

std::string_view sort_name(Sort s) {
  switch (s) {
  case Sort::Bool: return "Bool";
  case Sort::Int: return "Int";
  case Sort::Real: return "Real";
  case Sort::Unit: return "Unit";
  }
  return "?";
}

std::optional<Sort> parse_sort(std::string_view text) {
  if (text == "Bool") return Sort::Bool;
  if (text == "Int") return Sort::Int;
  if (text == "Real") return Sort::Real;
  if (text == "Unit") return Sort::Unit;
  return std::nullopt;
}

std::vector<Sort> sorts_of(const VarList &vars) {
  std::vector<Sort> out;
  out.reserve(vars.size());
  for (const auto &v : vars) out.push_back(v.sort);
  return out;
}

std::string var_list_to_string(const VarList &vars) {
  if (vars.empty()) return "()";
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ", ";
    out += vars[i].name;
    if (vars[i].sort != Sort::Real) {
      out += ":";
      out += sort_name(vars[i].sort);
    }
  }
  return out;
}

std::string value_to_string(const Value &v) {
  if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto q = std::get_if<Rational>(&v)) return rational_to_string(*q);
  return "()";
}

const Rational &as_rational(const Value &v) {
  if (auto q = std::get_if<Rational>(&v)) return *q;
  throw Error(ErrorCode::SortMismatch, "expected a numeric value, got " + value_to_string(v));
}

bool as_bool(const Value &v) {
  if (auto b = std::get_if<bool>(&v)) return *b;
  throw Error(ErrorCode::SortMismatch, "expected a boolean value, got " + value_to_string(v));
}

// ---------------------------------------------------------------------------
// Nodes

struct Expr::Node {
  Op op;
  Sort sort;
  Var var;
  Rational value;
  std::vector<Expr> args;
  std::size_t hash = 0;
  std::uint64_t size = 1;
  std::uint64_t quantifiers = 0;
  std::shared_ptr<const VarSet> free;
};

namespace {

const std::shared_ptr<const VarSet> &empty_var_set() {
  static const auto empty = std::make_shared<const VarSet>();
  return empty;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  return r < a ? std::numeric_limits<std::uint64_t>::max() : r;
}

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

} // namespace

Expr Expr::make(Op op, Sort sort, Var var, Rational value, std::vector<Expr> args) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->sort = sort;
  node->var = std::move(var);
  node->value = std::move(value);
  node->args = std::move(args);

  std::size_t h = mix(static_cast<std::size_t>(op), static_cast<std::size_t>(sort));
  if (op == Op::Var || op == Op::Exists || op == Op::Forall) {
    h = mix(h, std::hash<std::string>{}(node->var.name));
    h = mix(h, static_cast<std::size_t>(node->var.sort));
  }
  if (op == Op::Num) h = mix(h, std::hash<std::string>{}(rational_to_string(node->value)));
  for (const auto &a : node->args) {
    h = mix(h, a.hash());
    node->size = sat_add(node->size, a.size());
    node->quantifiers = sat_add(node->quantifiers, a.quantifier_count());
  }
  if (op == Op::Exists || op == Op::Forall) node->quantifiers = sat_add(node->quantifiers, 1);
  node->hash = h;

  if (op == Op::Var) {
    node->free = std::make_shared<const VarSet>(VarSet{node->var});
  } else if (op == Op::Exists || op == Op::Forall) {
    const auto &body = node->args[0].node_->free;
    if (body->count(node->var)) {
      auto copy = std::make_shared<VarSet>(*body);
      copy->erase(node->var);
      node->free = std::move(copy);
    } else {
      node->free = body;
    }
  } else {
    std::shared_ptr<const VarSet> acc = empty_var_set();
    for (const auto &a : node->args) {
      const auto &f = a.node_->free;
      if (f->empty() || f == acc) continue;
      if (acc->empty()) {
        acc = f;
        continue;
      }
      if (std::includes(acc->begin(), acc->end(), f->begin(), f->end())) continue;
      if (std::includes(f->begin(), f->end(), acc->begin(), acc->end())) {
        acc = f;
        continue;
      }
      auto merged = std::make_shared<VarSet>(*acc);
      merged->insert(f->begin(), f->end());
      acc = std::move(merged);
    }
    node->free = acc;
  }
  return Expr(std::move(node));
}

Expr::Expr() {
  static const Expr t = make(Op::True, Sort::Bool, {}, {}, {});
  node_ = t.node_;
}

Op Expr::op() const { return node_->op; }
Sort Expr::sort() const { return node_->sort; }
const Var &Expr::var() const { return node_->var; }
const Rational &Expr::value() const { return node_->value; }
const std::vector<Expr> &Expr::args() const { return node_->args; }
const VarSet &Expr::free_vars() const { return *node_->free; }
bool Expr::occurs_free(const Var &v) const { return node_->free->count(v) > 0; }
std::uint64_t Expr::size() const { return node_->size; }
std::uint64_t Expr::quantifier_count() const { return node_->quantifiers; }
std::size_t Expr::hash() const { return node_->hash; }

bool operator==(const Expr &a, const Expr &b) {
  if (a.node_ == b.node_) return true;
  const auto &x = *a.node_;
  const auto &y = *b.node_;
  if (x.hash != y.hash || x.op != y.op || x.sort != y.sort || x.args.size() != y.args.size()) return false;
  if ((x.op == Op::Var || x.op == Op::Exists || x.op == Op::Forall) && x.var != y.var) return false;
  if (x.op == Op::Num && x.value != y.value) return false;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!(x.args[i] == y.args[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Smart constructors

namespace ex {
namespace {

[[noreturn]] void sort_error(std::string_view what, const Expr &a, const Expr &b) {
  throw Error(ErrorCode::SortMismatch, std::string(what) + ": operands '" + to_string(a) + "' : " +
                                           std::string(sort_name(a.sort())) + " and '" + to_string(b) +
                                           "' : " + std::string(sort_name(b.sort())));
}

// Numeric literals adopt the sort of the other operand.
Expr retype_literal(const Expr &lit, Sort target) {
  if (target == Sort::Int && lit.value().get_den() != 1)
    throw Error(ErrorCode::SortMismatch, "non-integer literal " + to_string(lit) + " used as Int");
  return num(lit.value(), target);
}

std::pair<Expr, Expr> unify_numeric(std::string_view what, Expr a, Expr b) {
  if (!is_numeric(a.sort()) || !is_numeric(b.sort())) sort_error(what, a, b);
  if (a.sort() != b.sort()) {
    if (a.is_num())
      a = retype_literal(a, b.sort());
    else if (b.is_num())
      b = retype_literal(b, a.sort());
    else
      sort_error(what, a, b);
  }
  return {a, b};
}

void require_bool(std::string_view what, const Expr &a) {
  if (a.sort() != Sort::Bool)
    throw Error(ErrorCode::SortMismatch,
                std::string(what) + " expects Bool, got '" + to_string(a) + "' : " + std::string(sort_name(a.sort())));
}

Expr arith(Op op, std::string_view what, const Expr &a, const Expr &b) {
  auto [x, y] = unify_numeric(what, a, b);
  Sort s = x.sort();
  return Expr::make(op, s, {}, {}, {x, y});
}

Expr compare(Op op, std::string_view what, const Expr &a, const Expr &b) {
  auto [x, y] = unify_numeric(what, a, b);
  return Expr::make(op, Sort::Bool, {}, {}, {x, y});
}

Expr equality(Op op, const Expr &a, const Expr &b) {
  if (is_numeric(a.sort()) || is_numeric(b.sort())) return compare(op, op == Op::Eq ? "=" : "!=", a, b);
  if (a.sort() != b.sort()) sort_error(op == Op::Eq ? "=" : "!=", a, b);
  return Expr::make(op, Sort::Bool, {}, {}, {a, b});
}

} // namespace

Expr var(const Var &v) {
  if (v.name.empty()) throw Error(ErrorCode::SyntaxError, "empty variable name");
  return Expr::make(Op::Var, v.sort, v, {}, {});
}
Expr var(std::string name, Sort sort) { return var(Var{std::move(name), sort}); }
Expr num(const Rational &q, Sort sort) {
  if (!is_numeric(sort)) throw Error(ErrorCode::SortMismatch, "numeric literal of sort " + std::string(sort_name(sort)));
  Rational c = q;
  c.canonicalize();
  return Expr::make(Op::Num, sort, {}, c, {});
}
Expr num(long n, Sort sort) { return num(Rational(n), sort); }
Expr tru() {
  static const Expr t;
  return t;
}
Expr fls() {
  static const Expr f = Expr::make(Op::False, Sort::Bool, {}, {}, {});
  return f;
}
Expr boolean(bool b) { return b ? tru() : fls(); }
Expr unit() {
  static const Expr u = Expr::make(Op::Unit, Sort::Unit, {}, {}, {});
  return u;
}
Expr neg(const Expr &a) {
  if (!is_numeric(a.sort())) throw Error(ErrorCode::SortMismatch, "negation of non-numeric '" + to_string(a) + "'");
  return Expr::make(Op::Neg, a.sort(), {}, {}, {a});
}
Expr add(const Expr &a, const Expr &b) { return arith(Op::Add, "+", a, b); }
Expr sub(const Expr &a, const Expr &b) { return arith(Op::Sub, "-", a, b); }
Expr mul(const Expr &a, const Expr &b) { return arith(Op::Mul, "*", a, b); }
Expr div(const Expr &a, const Expr &b) { return arith(Op::Div, "/", a, b); }
Expr eq(const Expr &a, const Expr &b) { return equality(Op::Eq, a, b); }
Expr neq(const Expr &a, const Expr &b) { return equality(Op::Neq, a, b); }
Expr lt(const Expr &a, const Expr &b) { return compare(Op::Lt, "<", a, b); }
Expr le(const Expr &a, const Expr &b) { return compare(Op::Le, "<=", a, b); }
Expr gt(const Expr &a, const Expr &b) { return lt(b, a); }
Expr ge(const Expr &a, const Expr &b) { return le(b, a); }
Expr land(const Expr &a, const Expr &b) {
  require_bool("&", a);
  require_bool("&", b);
  return Expr::make(Op::And, Sort::Bool, {}, {}, {a, b});
}
Expr lor(const Expr &a, const Expr &b) {
  require_bool("|", a);
  require_bool("|", b);
  return Expr::make(Op::Or, Sort::Bool, {}, {}, {a, b});
}
Expr lnot(const Expr &a) {
  require_bool("!", a);
  return Expr::make(Op::Not, Sort::Bool, {}, {}, {a});
}
Expr implies(const Expr &a, const Expr &b) {
  require_bool("=>", a);
  require_bool("=>", b);
  return Expr::make(Op::Implies, Sort::Bool, {}, {}, {a, b});
}
Expr ite(const Expr &c, const Expr &t, const Expr &e) {
  require_bool("ite", c);
  Expr x = t, y = e;
  if (x.sort() != y.sort()) {
    if (is_numeric(x.sort()) && is_numeric(y.sort())) {
      std::tie(x, y) = unify_numeric("ite", x, y);
    } else {
      sort_error("ite", t, e);
    }
  }
  return Expr::make(Op::Ite, x.sort(), {}, {}, {c, x, y});
}
Expr exists(const Var &v, const Expr &body) {
  require_bool("exists", body);
  return Expr::make(Op::Exists, Sort::Bool, v, {}, {body});
}
Expr forall(const Var &v, const Expr &body) {
  require_bool("forall", body);
  return Expr::make(Op::Forall, Sort::Bool, v, {}, {body});
}
Expr exists(const VarList &vs, const Expr &body) {
  Expr e = body;
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) e = exists(*it, e);
  return e;
}
Expr forall(const VarList &vs, const Expr &body) {
  Expr e = body;
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) e = forall(*it, e);
  return e;
}
Expr conj(const std::vector<Expr> &parts) {
  if (parts.empty()) return tru();
  Expr e = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) e = land(*it, e);
  return e;
}
Expr disj(const std::vector<Expr> &parts) {
  if (parts.empty()) return fls();
  Expr e = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) e = lor(*it, e);
  return e;
}

} // namespace ex

std::vector<Expr> conjuncts(const Expr &e) {
  std::vector<Expr> out;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr top = stack.back();
    stack.pop_back();
    if (top.op() == Op::And) {
      stack.push_back(top.arg(1));
      stack.push_back(top.arg(0));
    } else {
      out.push_back(top);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string_view op_symbol(Op op) {
  switch (op) {
  case Op::Add: return " + ";
  case Op::Sub: return " - ";
  case Op::Mul: return " * ";
  case Op::Div: return " / ";
  case Op::Eq: return " = ";
  case Op::Neq: return " != ";
  case Op::Lt: return " < ";
  case Op::Le: return " <= ";
  case Op::And: return " & ";
  case Op::Or: return " | ";
  case Op::Implies: return " => ";
  default: return "";
  }
}

// Operands that print as a single token (or are already delimited) need no
// parentheses.
bool is_simple_operand(const Expr &e) {
  switch (e.op()) {
  case Op::Var:
  case Op::True:
  case Op::False:
  case Op::Unit:
  case Op::Ite:
    return true;
  case Op::Num:
    return sgn(e.value()) >= 0;
  default:
    return false;
  }
}

void print(const Expr &e, std::string &out);

void print_operand(const Expr &e, std::string &out) {
  if (is_simple_operand(e)) {
    print(e, out);
  } else {
    out += '(';
    print(e, out);
    out += ')';
  }
}

void print(const Expr &e, std::string &out) {
  switch (e.op()) {
  case Op::Var: out += e.var().name; return;
  case Op::Num: out += rational_to_string(e.value()); return;
  case Op::True: out += "true"; return;
  case Op::False: out += "false"; return;
  case Op::Unit: out += "()"; return;
  case Op::Neg:
    out += '-';
    print_operand(e.arg(0), out);
    return;
  case Op::Not:
    out += '!';
    print_operand(e.arg(0), out);
    return;
  case Op::Ite:
    out += "ite(";
    print(e.arg(0), out);
    out += ", ";
    print(e.arg(1), out);
    out += ", ";
    print(e.arg(2), out);
    out += ')';
    return;
  case Op::Exists:
  case Op::Forall:
    out += e.op() == Op::Exists ? "exists " : "forall ";
    out += e.var().name;
    out += ':';
    out += sort_name(e.var().sort);
    out += " . ";
    print(e.arg(0), out);
    return;
  default:
    print_operand(e.arg(0), out);
    out += op_symbol(e.op());
    print_operand(e.arg(1), out);
  }
}

} // namespace

std::string to_string(const Expr &e) {
  std::string out;
  print(e, out);
  return out;
}

std::uint64_t printed_length(const Expr &e) {
  std::unordered_map<const Expr::Node *, std::uint64_t> memo;
  std::function<std::uint64_t(const Expr &)> len = [&](const Expr &x) -> std::uint64_t {
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    auto operand = [&](const Expr &a) { return sat_add(len(a), is_simple_operand(a) ? 0 : 2); };
    std::uint64_t n = 0;
    switch (x.op()) {
    case Op::Var: n = x.var().name.size(); break;
    case Op::Num: n = rational_to_string(x.value()).size(); break;
    case Op::True: n = 4; break;
    case Op::False: n = 5; break;
    case Op::Unit: n = 2; break;
    case Op::Neg:
    case Op::Not: n = sat_add(1, operand(x.arg(0))); break;
    case Op::Ite: n = sat_add(sat_add(sat_add(len(x.arg(0)), len(x.arg(1))), len(x.arg(2))), 9); break;
    case Op::Exists:
    case Op::Forall:
      n = sat_add(7 + x.var().name.size() + 1 + sort_name(x.var().sort).size() + 3, len(x.arg(0)));
      break;
    default:
      n = sat_add(sat_add(operand(x.arg(0)), operand(x.arg(1))), op_symbol(x.op()).size());
    }
    memo.emplace(x.id(), n);
    return n;
  };
  return len(e);
}

// ---------------------------------------------------------------------------
// Fresh names

void NameSupply::reserve(std::string_view name) { used_.emplace(name); }

void NameSupply::reserve_all(const VarList &vars) {
  for (const auto &v : vars) reserve(v.name);
}

void NameSupply::reserve_all(const Expr &e) {
  std::unordered_set<const Expr::Node *> seen;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr x = stack.back();
    stack.pop_back();
    if (!seen.insert(x.id()).second) continue;
    if (x.op() == Op::Var || x.is_quantifier()) reserve(x.var().name);
    for (const auto &a : x.args()) stack.push_back(a);
  }
}

bool NameSupply::is_used(std::string_view name) const { return used_.count(std::string(name)) > 0; }

std::string NameSupply::fresh_name(std::string_view base) {
  std::string stem(base);
  // Strip an existing `_k` suffix so repeated freshening does not stack.
  auto us = stem.rfind('_');
  if (us != std::string::npos && us + 1 < stem.size() &&
      std::all_of(stem.begin() + us + 1, stem.end(), [](unsigned char c) { return std::isdigit(c); }))
    stem.erase(us);
  if (stem.empty()) stem = "v";
  for (;;) {
    std::string candidate = stem + "_" + std::to_string(++counter_);
    if (used_.insert(candidate).second) return candidate;
  }
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

class Substituter {
public:
  Substituter(const Substitution &sigma, NameSupply &names) : sigma_(sigma), names_(names) {
    for (const auto &[v, t] : sigma_) {
      if (v.sort != t.sort() && !(is_numeric(v.sort) && t.is_num()))
        throw Error(ErrorCode::SortMismatch, "substituting '" + to_string(t) + "' : " +
                                                 std::string(sort_name(t.sort())) + " for " + v.name + " : " +
                                                 std::string(sort_name(v.sort)));
    }
  }

  Expr run(const Expr &e) {
    if (!touches(e)) return e;
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr out = apply(e);
    memo_.emplace(e.id(), out);
    return out;
  }

private:
  bool touches(const Expr &e) const {
    const auto &fv = e.free_vars();
    if (fv.size() < sigma_.size()) {
      for (const auto &v : fv)
        if (sigma_.count(v)) return true;
      return false;
    }
    for (const auto &kv : sigma_)
      if (fv.count(kv.first)) return true;
    return false;
  }

  Expr apply(const Expr &e) {
    switch (e.op()) {
    case Op::Var: {
      const Expr &t = sigma_.at(e.var());
      if (t.sort() != e.sort() && t.is_num()) return ex::num(t.value(), e.sort());
      return t;
    }
    case Op::Exists:
    case Op::Forall: {
      const Var &bound = e.var();
      Substitution inner;
      bool capture = false;
      for (const auto &[v, t] : sigma_) {
        if (v == bound || !e.arg(0).occurs_free(v)) continue;
        inner.emplace(v, t);
        if (t.occurs_free(bound)) capture = true;
      }
      Var binder = bound;
      if (capture) {
        binder = names_.fresh(bound);
        inner[bound] = ex::var(binder);
      }
      if (inner.empty()) return e;
      Substituter sub(inner, names_);
      Expr body = sub.run(e.arg(0));
      return e.op() == Op::Exists ? ex::exists(binder, body) : ex::forall(binder, body);
    }
    default: {
      std::vector<Expr> args;
      args.reserve(e.args().size());
      bool changed = false;
      for (const auto &a : e.args()) {
        args.push_back(run(a));
        changed = changed || args.back().id() != a.id();
      }
      if (!changed) return e;
      return rebuild(e, args);
    }
    }
  }

  static Expr rebuild(const Expr &e, const std::vector<Expr> &a) {
    switch (e.op()) {
    case Op::Neg: return ex::neg(a[0]);
    case Op::Add: return ex::add(a[0], a[1]);
    case Op::Sub: return ex::sub(a[0], a[1]);
    case Op::Mul: return ex::mul(a[0], a[1]);
    case Op::Div: return ex::div(a[0], a[1]);
    case Op::Eq: return ex::eq(a[0], a[1]);
    case Op::Neq: return ex::neq(a[0], a[1]);
    case Op::Lt: return ex::lt(a[0], a[1]);
    case Op::Le: return ex::le(a[0], a[1]);
    case Op::And: return ex::land(a[0], a[1]);
    case Op::Or: return ex::lor(a[0], a[1]);
    case Op::Not: return ex::lnot(a[0]);
    case Op::Implies: return ex::implies(a[0], a[1]);
    case Op::Ite: return ex::ite(a[0], a[1], a[2]);
    default: return Expr::make(e.op(), e.sort(), e.var(), e.value(), a);
    }
  }

  const Substitution &sigma_;
  NameSupply &names_;
  std::unordered_map<const Expr::Node *, Expr> memo_;
};

} // namespace

Expr substitute(const Expr &e, const Substitution &sigma, NameSupply *names) {
  if (sigma.empty()) return e;
  NameSupply local;
  if (!names) {
    local.reserve_all(e);
    for (const auto &[v, t] : sigma) {
      local.reserve(v);
      local.reserve_all(t);
    }
    names = &local;
  }
  Substituter sub(sigma, *names);
  return sub.run(e);
}

Expr rename(const Expr &e, const std::map<Var, Var> &renaming, NameSupply *names) {
  Substitution sigma;
  for (const auto &[from, to] : renaming)
    if (from != to) sigma.emplace(from, ex::var(to));
  return substitute(e, sigma, names);
}

// ---------------------------------------------------------------------------
// Evaluation

DomainConfig DomainConfig::range(long lo, long hi) {
  DomainConfig d;
  for (long i = lo; i <= hi; ++i) {
    d.ints.emplace_back(i);
    d.reals.emplace_back(i);
  }
  return d;
}

std::vector<Value> DomainConfig::carrier(Sort s) const {
  std::vector<Value> out;
  switch (s) {
  case Sort::Bool: out = {Value{false}, Value{true}}; break;
  case Sort::Unit: out = {Value{UnitValue{}}}; break;
  case Sort::Int:
    for (const auto &q : ints) out.emplace_back(q);
    break;
  case Sort::Real:
    for (const auto &q : reals) out.emplace_back(q);
    break;
  }
  return out;
}

namespace {

class Evaluator {
public:
  Evaluator(const Env &env, const DomainConfig &domain, DivisionMode mode) : env_(env), domain_(domain), mode_(mode) {}

  Value run(const Expr &e) {
    switch (e.op()) {
    case Op::Var: {
      auto it = env_.find(e.var().name);
      if (it == env_.end()) throw Error(ErrorCode::UnboundVariable, e.var().name);
      return it->second;
    }
    case Op::Num: return e.value();
    case Op::True: return true;
    case Op::False: return false;
    case Op::Unit: return UnitValue{};
    case Op::Neg: return Rational(-num(e.arg(0)));
    case Op::Add: return Rational(num(e.arg(0)) + num(e.arg(1)));
    case Op::Sub: return Rational(num(e.arg(0)) - num(e.arg(1)));
    case Op::Mul: return Rational(num(e.arg(0)) * num(e.arg(1)));
    case Op::Div: {
      Rational a = num(e.arg(0));
      Rational b = num(e.arg(1));
      if (b == 0) {
        if (mode_ == DivisionMode::Strict) throw Error(ErrorCode::DivisionByZero, to_string(e));
        return Rational(0);
      }
      return Rational(a / b);
    }
    case Op::Eq: return run(e.arg(0)) == run(e.arg(1));
    case Op::Neq: return !(run(e.arg(0)) == run(e.arg(1)));
    case Op::Lt: return num(e.arg(0)) < num(e.arg(1));
    case Op::Le: return num(e.arg(0)) <= num(e.arg(1));
    case Op::And: return boolean(e.arg(0)) && boolean(e.arg(1));
    case Op::Or: return boolean(e.arg(0)) || boolean(e.arg(1));
    case Op::Not: return !boolean(e.arg(0));
    case Op::Implies: return !boolean(e.arg(0)) || boolean(e.arg(1));
    case Op::Ite: return boolean(e.arg(0)) ? run(e.arg(1)) : run(e.arg(2));
    case Op::Exists:
    case Op::Forall: {
      const bool is_exists = e.op() == Op::Exists;
      const std::string &name = e.var().name;
      std::optional<Value> saved;
      if (auto it = env_.find(name); it != env_.end()) saved = it->second;
      bool result = !is_exists;
      for (const auto &v : domain_.carrier(e.var().sort)) {
        env_[name] = v;
        bool b = boolean(e.arg(0));
        if (b == is_exists) {
          result = is_exists;
          break;
        }
      }
      if (saved)
        env_[name] = *saved;
      else
        env_.erase(name);
      return result;
    }
    }
    throw Error(ErrorCode::SyntaxError, "unknown expression node");
  }

private:
  Rational num(const Expr &e) { return as_rational(run(e)); }
  bool boolean(const Expr &e) { return as_bool(run(e)); }

  Env env_;
  const DomainConfig &domain_;
  DivisionMode mode_;
};

} // namespace

Value eval(const Expr &e, const Env &env, const DomainConfig &domain, DivisionMode mode) {
  Evaluator ev(env, domain, mode);
  return ev.run(e);
}

bool eval_bool(const Expr &e, const Env &env, const DomainConfig &domain, DivisionMode mode) {
  return as_bool(eval(e, env, domain, mode));
}

} // namespace hbdpt
