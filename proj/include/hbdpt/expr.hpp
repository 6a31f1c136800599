#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "hbdpt/error.hpp"

namespace hbdpt {

using Rational = mpq_class;

std::string rational_to_string(const Rational &q);
/// Accepts `n`, `-n`, `n/d` and plain decimals such as `0.01`.
Rational parse_rational(std::string_view text);
double rational_to_double(const Rational &q);

enum class Sort : std::uint8_t { Bool, Int, Real, Unit };

std::string_view sort_name(Sort s);
std::optional<Sort> parse_sort(std::string_view text);
inline bool is_numeric(Sort s) { return s == Sort::Int || s == Sort::Real; }

struct Var {
  std::string name;
  Sort sort = Sort::Real;

  friend bool operator==(const Var &, const Var &) = default;
  friend auto operator<=>(const Var &, const Var &) = default;
};

using VarList = std::vector<Var>;
using VarSet = std::set<Var>;

std::vector<Sort> sorts_of(const VarList &vars);
std::string var_list_to_string(const VarList &vars);

struct UnitValue {
  friend bool operator==(UnitValue, UnitValue) { return true; }
  friend bool operator<(UnitValue, UnitValue) { return false; }
};

using Value = std::variant<bool, Rational, UnitValue>;

std::string value_to_string(const Value &v);
const Rational &as_rational(const Value &v);
bool as_bool(const Value &v);

enum class Op : std::uint8_t {
  Var,
  Num,
  True,
  False,
  Unit,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Eq,
  Neq,
  Lt,
  Le,
  And,
  Or,
  Not,
  Implies,
  Ite,
  Exists,
  Forall,
};

/// Immutable, structurally shared expression. Copies are cheap.
class Expr {
public:
  struct Node;

  /// The literal `true`.
  Expr();

  Op op() const;
  Sort sort() const;
  /// The variable of a Var node, or the binder of a quantifier.
  const Var &var() const;
  const Rational &value() const;
  const std::vector<Expr> &args() const;
  const Expr &arg(std::size_t i) const { return args()[i]; }

  const VarSet &free_vars() const;
  bool occurs_free(const Var &v) const;

  /// Tree size, saturating at UINT64_MAX; shared subterms count every time.
  std::uint64_t size() const;
  std::uint64_t quantifier_count() const;
  std::size_t hash() const;

  bool is_true() const { return op() == Op::True; }
  bool is_false() const { return op() == Op::False; }
  bool is_quantifier() const { return op() == Op::Exists || op() == Op::Forall; }
  bool is_var() const { return op() == Op::Var; }
  bool is_num() const { return op() == Op::Num; }

  /// Identity of the shared node; used for memoisation.
  const Node *id() const { return node_.get(); }

  friend bool operator==(const Expr &a, const Expr &b);
  friend bool operator!=(const Expr &a, const Expr &b) { return !(a == b); }

  static Expr make(Op op, Sort sort, Var var, Rational value, std::vector<Expr> args);

private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct ExprHash {
  std::size_t operator()(const Expr &e) const { return e.hash(); }
};

/// Smart constructors. They check sorts and throw SortMismatch.
namespace ex {
Expr var(const Var &v);
Expr var(std::string name, Sort sort = Sort::Real);
Expr num(const Rational &q, Sort sort = Sort::Real);
Expr num(long n, Sort sort = Sort::Real);
Expr boolean(bool b);
Expr tru();
Expr fls();
Expr unit();
Expr neg(const Expr &a);
Expr add(const Expr &a, const Expr &b);
Expr sub(const Expr &a, const Expr &b);
Expr mul(const Expr &a, const Expr &b);
Expr div(const Expr &a, const Expr &b);
Expr eq(const Expr &a, const Expr &b);
Expr neq(const Expr &a, const Expr &b);
Expr lt(const Expr &a, const Expr &b);
Expr le(const Expr &a, const Expr &b);
Expr gt(const Expr &a, const Expr &b);
Expr ge(const Expr &a, const Expr &b);
Expr land(const Expr &a, const Expr &b);
Expr lor(const Expr &a, const Expr &b);
Expr lnot(const Expr &a);
Expr implies(const Expr &a, const Expr &b);
Expr ite(const Expr &c, const Expr &t, const Expr &e);
Expr exists(const Var &v, const Expr &body);
Expr forall(const Var &v, const Expr &body);
/// Nested quantifiers, first variable outermost.
Expr exists(const VarList &vs, const Expr &body);
Expr forall(const VarList &vs, const Expr &body);
/// Right-nested conjunction; `true` when empty.
Expr conj(const std::vector<Expr> &parts);
Expr disj(const std::vector<Expr> &parts);
} // namespace ex

/// Splits nested conjunctions into their operands (left to right).
std::vector<Expr> conjuncts(const Expr &e);

/// Canonical text: infix with explicit parentheses around compound operands,
/// quantifiers as `exists v:Sort . body`, rationals as `n/d`.
std::string to_string(const Expr &e);
/// Length of to_string(e) without building the string (memoised over sharing).
std::uint64_t printed_length(const Expr &e);

/// Deterministic fresh names of the form `base_k` from one session counter.
class NameSupply {
public:
  void reserve(std::string_view name);
  void reserve(const Var &v) { reserve(v.name); }
  void reserve_all(const Expr &e);
  void reserve_all(const VarList &vars);
  bool is_used(std::string_view name) const;
  std::string fresh_name(std::string_view base);
  Var fresh(const Var &like) { return Var{fresh_name(like.name), like.sort}; }

private:
  std::unordered_set<std::string> used_;
  std::uint64_t counter_ = 0;
};

using Substitution = std::map<Var, Expr>;

/// Capture-avoiding simultaneous substitution. Bound variables that would
/// capture a free variable of an inserted term are renamed via `names`
/// (a local supply is used when null).
Expr substitute(const Expr &e, const Substitution &sigma, NameSupply *names = nullptr);
Expr rename(const Expr &e, const std::map<Var, Var> &renaming, NameSupply *names = nullptr);

/// Finite carriers used to evaluate quantifiers. Never enumerates an
/// infinite sort.
struct DomainConfig {
  std::vector<Rational> ints;
  std::vector<Rational> reals;

  static DomainConfig range(long lo, long hi);
  static DomainConfig standard() { return range(-2, 2); }
  std::vector<Value> carrier(Sort s) const;
};

enum class DivisionMode {
  /// x/0 raises DivisionByZero.
  Strict,
  /// x/0 = 0, the HOL convention; makes every formula total.
  Total,
};

using Env = std::unordered_map<std::string, Value>;

Value eval(const Expr &e, const Env &env, const DomainConfig &domain = DomainConfig::standard(),
           DivisionMode mode = DivisionMode::Strict);
bool eval_bool(const Expr &e, const Env &env, const DomainConfig &domain = DomainConfig::standard(),
               DivisionMode mode = DivisionMode::Strict);

struct SimplifyOptions {
  std::uint64_t step_budget = 100000;
};

struct SimplifyResult {
  Expr expr;
  std::uint64_t steps = 0;
  bool budget_exhausted = false;
};

/// Equivalence-preserving rewriting: constant folding, unit/zero laws,
/// double negation, one-point quantifier elimination, miniscoping and
/// dropping vacuous quantifiers. Runs to a fixed point within the budget.
SimplifyResult simplify_formula(const Expr &e, const SimplifyOptions &opts, NameSupply *names = nullptr);
Expr simplify_formula(const Expr &e);

/// Parses the canonical text. Free identifiers must be declared in `scope`.
Expr parse_expr(std::string_view text, const std::map<std::string, Sort> &scope);

} // namespace hbdpt
