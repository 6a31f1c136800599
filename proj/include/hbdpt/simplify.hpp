#pragma once

#include <map>
#include <string>
#include <vector>

#include "hbdpt/translate.hpp"

namespace hbdpt {

struct ExpansionStep {
  /// R1..R6.
  std::string rule;
  /// Printed length of the operands and of the (simplified) result.
  std::uint64_t before = 0;
  std::uint64_t after = 0;
  /// Quantifiers added by the rule itself, before any simplification.
  std::int64_t quantifiers = 0;
};

struct ExpansionTrace {
  std::vector<ExpansionStep> steps;
  bool budget_exhausted = false;

  std::size_t count(std::string_view rule) const;
  std::int64_t quantifiers_introduced() const;
  /// e.g. `R2 x3, R4 x1, R5 x1; +0 quantifiers`.
  std::string summary() const;
};

struct ExpandOptions {
  /// Largest formula (tree nodes of pre plus rel) any step may produce.
  std::uint64_t node_budget = 10'000'000;
  double seconds = 60;
  /// simplify_formula after every rule.
  bool simplify = true;
  /// Take R5 whenever it applies. Off: every feedback uses R6.
  bool special_feedback = true;
};

struct Expansion {
  /// The normal form of the term. When the budget runs out, the last
  /// completed intermediate result instead.
  AtomicPT result;
  ExpansionTrace trace;
};

using AtomDefs = std::map<std::string, AtomicPT>;

/// Bottom-up rewriting to one AtomicPT. NamedRefs are looked up in `defs`,
/// then in `fallback` (block atoms when empty). Result ports carry fresh
/// names. Throws UnresolvedRef.
Expansion expand(const CptTerm &t, const AtomDefs &defs = {}, const Resolver &fallback = {},
                 const ExpandOptions &opts = {});

/// The composition rules, without simplification. Operands must have
/// pairwise distinct port names; `names` must know every name in use.
namespace rules {
/// Serial through the relation: pre p & (forall y. r => p'), rel exists y.
AtomicPT serial_rel(const AtomicPT &a, const AtomicPT &b);
/// Serial by substitution; both operands functional.
AtomicPT serial_func(const AtomicPT &a, const AtomicPT &b);
AtomicPT parallel_rel(const AtomicPT &a, const AtomicPT &b);
AtomicPT parallel_func(const AtomicPT &a, const AtomicPT &b);
/// Functional feedback; applies when the first body omits the first input.
bool feedback_func_applies(const AtomicPT &a);
AtomicPT feedback_func(const AtomicPT &a);
/// General feedback over a relation. Bound variables come from `names`.
AtomicPT feedback_rel(const AtomicPT &a, NameSupply &names);
} // namespace rules

/// Simplifies pre, rel and bodies.
AtomicPT simplify_atom(const AtomicPT &a, NameSupply *names = nullptr);

/// Solves rel for the outputs when it is a conjunction of equations; returns
/// the input unchanged otherwise.
AtomicPT detect_functional(const AtomicPT &a);

enum class Verdict { Compatible, Incompatible, Unknown };

struct CompatStatus {
  Verdict verdict = Verdict::Unknown;
  /// A legal input when Compatible.
  Env witness;
  /// Incompatible because no carrier value works, not because pre is `false`.
  bool domain_relative = false;

  /// `Compatible (s = -2)`, `Incompatible: precondition is false`, ...
  /// `shown` renames the inputs positionally.
  std::string text(const VarList &inputs, const VarList *shown = nullptr) const;
};

CompatStatus check_compat(const AtomicPT &a, const DomainConfig &dom = DomainConfig::standard(),
                          std::uint64_t cap = 1'000'000);

/// Equal up to port and bound-variable renaming, conjunct order and the
/// order of `+` operands.
bool alpha_equiv(const AtomicPT &a, const AtomicPT &b);

struct SimplifiedDef {
  std::string name;
  AtomicPT atom;
  ExpansionTrace trace;
  CompatStatus compat;
  double seconds = 0;
};

struct SimplifyReport {
  std::vector<SimplifiedDef> defs;
  std::string top;
  bool budget_exhausted = false;

  const SimplifiedDef *find(const std::string &name) const;
  /// Null when the budget ran out first.
  const SimplifiedDef *top_def() const;
};

/// Expands every definition in order, each over the simplified earlier ones,
/// and renames the result to the definition's ports. Stops at the first
/// definition that exhausts the budget.
SimplifyReport simplify_unit(const TranslationUnit &u, const ExpandOptions &opts = {},
                             const DomainConfig &dom = DomainConfig::standard());

/// The atom with ports shown under their short names.
AtomicPT display_form(const AtomicPT &a);

/// One `name = atom` line per definition, each followed by a `#` line with
/// the compatibility verdict and the trace summary.
std::string to_text(const SimplifyReport &r);
nlohmann::json to_json(const SimplifyReport &r);

} // namespace hbdpt
