#pragma once

#include <functional>
#include <map>
#include <set>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hbdpt/expr.hpp"

namespace hbdpt {

/// Normal form {pre} ; [rel] over explicit port lists. When `bodies` is
/// present, rel is kept equal to the conjunction of `output_i = body_i`.
struct AtomicPT {
  VarList inputs;
  VarList outputs;
  Expr pre = ex::tru();
  Expr rel = ex::tru();
  std::optional<std::vector<Expr>> bodies;

  static AtomicPT functional(VarList inputs, VarList outputs, std::vector<Expr> bodies, Expr pre = ex::tru());
  static AtomicPT relational(VarList inputs, VarList outputs, Expr rel, Expr pre = ex::tru());

  bool is_functional() const { return bodies.has_value(); }
  std::vector<Sort> in_sorts() const { return sorts_of(inputs); }
  std::vector<Sort> out_sorts() const { return sorts_of(outputs); }
  /// Quantifiers in pre and rel together.
  std::uint64_t quantifier_count() const;
};

/// `out_1 = b_1 & ... & out_n = b_n`.
Expr functional_rel(const VarList &outputs, const std::vector<Expr> &bodies);

struct Signature {
  std::vector<Sort> in;
  std::vector<Sort> out;
  friend bool operator==(const Signature &, const Signature &) = default;
};

std::string signature_to_string(const Signature &s);

enum class CptKind { Assert, UpdateRel, UpdateFunc, Id, Serial, Parallel, Feedback, NamedRef };

/// Composite predicate-transformer term. Every node carries its signature,
/// so the smart constructors reject ill-formed compositions.
class CptTerm {
public:
  struct Node;

  CptKind kind() const;
  const Signature &signature() const;
  const std::vector<Sort> &in_sorts() const { return signature().in; }
  const std::vector<Sort> &out_sorts() const { return signature().out; }

  /// Atom ports (Assert/UpdateRel/UpdateFunc).
  const VarList &inputs() const;
  const VarList &outputs() const;
  /// Assert predicate or UpdateRel relation.
  const Expr &formula() const;
  const std::vector<Expr> &bodies() const;
  const CptTerm &left() const;
  const CptTerm &right() const;
  /// Feedback body.
  const CptTerm &body() const;
  const std::string &name() const;

  std::uint64_t size() const;
  std::size_t hash() const;
  const Node *id() const { return node_.get(); }

  friend bool operator==(const CptTerm &a, const CptTerm &b);
  friend bool operator!=(const CptTerm &a, const CptTerm &b) { return !(a == b); }

  static CptTerm assert_(VarList inputs, Expr pred);
  static CptTerm update_rel(VarList inputs, VarList outputs, Expr rel);
  static CptTerm update_func(VarList inputs, VarList outputs, std::vector<Expr> bodies);
  /// Output names default to `y1..yn`.
  static CptTerm update_func(VarList inputs, std::vector<Expr> bodies);
  static CptTerm id(std::vector<Sort> sorts);
  static CptTerm serial(const CptTerm &a, const CptTerm &b);
  static CptTerm parallel(const CptTerm &a, const CptTerm &b);
  static CptTerm feedback(const CptTerm &a);
  static CptTerm named(std::string name, Signature sig);

private:
  explicit CptTerm(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct CptTermHash {
  std::size_t operator()(const CptTerm &t) const { return t.hash(); }
};

/// Resolves a NamedRef name (block atom or earlier definition) to its term.
using Resolver = std::function<std::optional<CptTerm>(const std::string &)>;

Signature signature(const CptTerm &t);

/// [from -> to] where each output copies the input of the same name.
CptTerm reroute(const VarList &from, const VarList &to);
bool is_identity_reroute(const VarList &from, const VarList &to);

/// Left-nested folds; empty input is invalid.
CptTerm serial_all(const std::vector<CptTerm> &parts);
CptTerm parallel_all(const std::vector<CptTerm> &parts);

/// `{x : p} ; [x -> f]`, or just the update when p is `true`.
CptTerm as_term(const AtomicPT &a);

/// Canonical text. Binary combinators are always parenthesised except as the
/// direct argument of `feedback(...)`.
std::string pretty(const CptTerm &t);
std::string pretty(const AtomicPT &a);
/// pretty(a).size() without building the text.
std::uint64_t printed_length(const AtomicPT &a);
std::string var_decl_list(const VarList &vars);

/// Parses the canonical text; a bare `A ; B` at top level is accepted.
CptTerm parse_cpt(std::string_view text, const Resolver &resolve);

nlohmann::json to_json(const CptTerm &t);
nlohmann::json to_json(const AtomicPT &a);

std::uint64_t count_feedbacks(const CptTerm &t);
/// Names of all NamedRef nodes, in first-occurrence order.
std::vector<std::string> named_refs(const CptTerm &t);

/// Display names: the shortest dotted suffix of each name that no other
/// name ends with, e.g. `DelaySum.UnitDelay.s` -> `s`. Injective.
std::map<std::string, std::string> short_names(const std::set<std::string> &names);
/// Port names of all atoms in the term.
std::set<std::string> port_names(const CptTerm &t);
CptTerm rename_ports(const CptTerm &t, const std::map<std::string, std::string> &names);
AtomicPT rename_ports(const AtomicPT &a, const std::map<std::string, std::string> &names);

} // namespace hbdpt
