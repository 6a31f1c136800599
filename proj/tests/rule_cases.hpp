#pragma once

#include <optional>
#include <string>

#include "gen_atom.hpp"
#include "hbdpt/semantics.hpp"
#include "hbdpt/simplify.hpp"

namespace hbdpt::testing {

inline NameSupply supply_for(const AtomicPT &a) {
  NameSupply n;
  n.reserve_all(a.inputs);
  n.reserve_all(a.outputs);
  n.reserve_all(a.pre);
  n.reserve_all(a.rel);
  return n;
}

// One random instance of rule `rule` (1..6): the composite term and what the
// rule makes of it.
struct RuleCase {
  CptTerm composite;
  AtomicPT expanded;
  std::string shown;
};

inline RuleCase rule_case(int rule, AtomGen &g) {
  switch (rule) {
  case 1: {
    std::size_t mid = 1 + g.pick(2);
    bool left = g.pick(2);
    AtomicPT a = left ? g.relational("a", g.pick(3), mid) : g.any("a", g.pick(3), mid);
    AtomicPT b = left ? g.any("b", mid, 1 + g.pick(2)) : g.relational("b", mid, 1 + g.pick(2));
    return {CptTerm::serial(as_term(a), as_term(b)), rules::serial_rel(a, b), pretty(a) + " ; " + pretty(b)};
  }
  case 2: {
    std::size_t mid = 1 + g.pick(2);
    AtomicPT a = g.functional("a", g.pick(3), mid), b = g.functional("b", mid, 1 + g.pick(2));
    return {CptTerm::serial(as_term(a), as_term(b)), rules::serial_func(a, b), pretty(a) + " ; " + pretty(b)};
  }
  case 3: {
    AtomicPT a = g.relational("a", g.pick(3), 1 + g.pick(2)), b = g.any("b", g.pick(2), 1 + g.pick(2));
    return {CptTerm::parallel(as_term(a), as_term(b)), rules::parallel_rel(a, b), pretty(a) + " || " + pretty(b)};
  }
  case 4: {
    AtomicPT a = g.functional("a", g.pick(3), 1 + g.pick(2)), b = g.functional("b", g.pick(2), 1 + g.pick(2));
    return {CptTerm::parallel(as_term(a), as_term(b)), rules::parallel_func(a, b), pretty(a) + " || " + pretty(b)};
  }
  case 5: {
    // The first body must not read the first input.
    std::size_t nin = 1 + g.pick(3), nout = 1 + g.pick(2);
    VarList in = AtomGen::ports("ax", nin), out = AtomGen::ports("ay", nout);
    VarList rest(in.begin() + 1, in.end());
    std::vector<Expr> bodies{g.closed(rest)};
    for (std::size_t k = 1; k < nout; ++k) bodies.push_back(g.closed(in));
    AtomicPT a = AtomicPT::functional(in, out, bodies, g.maybe_pre(in));
    return {CptTerm::feedback(as_term(a)), rules::feedback_func(a), pretty(a)};
  }
  default: {
    AtomicPT a = g.any("a", 1 + g.pick(2), 1 + g.pick(2));
    NameSupply names = supply_for(a);
    return {CptTerm::feedback(as_term(a)), rules::feedback_rel(a, names), pretty(a)};
  }
  }
}

// Runs `n` instances; the first disagreement, if any.
inline std::optional<std::string> rule_soundness(int rule, int n, std::uint64_t seed) {
  AtomGen g(seed);
  for (int i = 0; i < n; ++i) {
    RuleCase c = rule_case(rule, g);
    if (!equiv(rel_sem(c.composite), rel_sem(c.expanded))) return "R" + std::to_string(rule) + ": " + c.shown;
  }
  return std::nullopt;
}

inline std::size_t count_num(const Expr &e, long v) {
  std::size_t n = e.is_num() && e.value() == v ? 1 : 0;
  for (const auto &a : e.args()) n += count_num(a, v);
  return n;
}

// feedback({p} ; [r]) with markers 97 in p and 89 in r, two inputs and two
// outputs.
struct R6Shape {
  std::size_t p_in_pre, r_in_pre, p_in_rel, r_in_rel;
  std::uint64_t q_pre, q_rel, q_p, q_r;
};

inline R6Shape r6_shape(AtomGen &g) {
  VarList in = AtomGen::ports("x", 2), out = AtomGen::ports("y", 2);
  VarList all = in;
  all.insert(all.end(), out.begin(), out.end());
  Expr p = ex::land(g.pred(in, 2, true), ex::neq(ex::var(in[0]), ex::num(97)));
  Expr r = ex::land(g.pred(all, 2, true), ex::neq(ex::var(out[0]), ex::num(89)));
  AtomicPT a = AtomicPT::relational(in, out, r, p);
  NameSupply names = supply_for(a);
  AtomicPT fb = rules::feedback_rel(a, names);
  return {count_num(fb.pre, 97),        count_num(fb.pre, 89),         count_num(fb.rel, 97),
          count_num(fb.rel, 89),        fb.pre.quantifier_count(),     fb.rel.quantifier_count(),
          p.quantifier_count(),         r.quantifier_count()};
}

} // namespace hbdpt::testing
