#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "hbdpt/expr.hpp"

namespace hbdpt {

namespace {

using ExprSet = std::unordered_set<Expr, ExprHash>;

// Complement of a literal, used for p & !p detection.
Expr complement(const Expr &c) {
  switch (c.op()) {
  case Op::Not: return c.arg(0);
  case Op::Eq: return ex::neq(c.arg(0), c.arg(1));
  case Op::Neq: return ex::eq(c.arg(0), c.arg(1));
  case Op::Lt: return ex::le(c.arg(1), c.arg(0));
  case Op::Le: return ex::lt(c.arg(1), c.arg(0));
  default: return ex::lnot(c);
  }
}

void flatten(Op op, const Expr &e, std::vector<Expr> &out) {
  if (e.op() == op) {
    flatten(op, e.arg(0), out);
    flatten(op, e.arg(1), out);
  } else {
    out.push_back(e);
  }
}

bool var_in(const Var &v, const VarList &vs) { return std::find(vs.begin(), vs.end(), v) != vs.end(); }

class Simplifier {
public:
  Simplifier(const SimplifyOptions &opts, NameSupply &names) : opts_(opts), names_(names) {}

  Expr run(const Expr &e) { return simp(e); }
  std::uint64_t steps() const { return steps_; }
  bool exhausted() const { return exhausted_; }

private:
  bool tick() {
    if (exhausted_) return false;
    if (++steps_ > opts_.step_budget) {
      exhausted_ = true;
      return false;
    }
    return true;
  }

  Expr simp(const Expr &e) {
    switch (e.op()) {
    case Op::Var:
    case Op::Num:
    case Op::True:
    case Op::False:
    case Op::Unit: return e;
    default: break;
    }
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second.second;
    Expr cur = e;
    if (!e.is_quantifier()) {
      std::vector<Expr> args;
      bool changed = false;
      for (const auto &a : e.args()) {
        args.push_back(simp(a));
        changed = changed || args.back().id() != a.id();
      }
      if (changed) cur = rebuild(e, args);
    }
    Expr out = cur;
    if (!exhausted_) {
      Expr r = rule(cur);
      if (r != cur && tick()) out = simp(r);
    }
    memo_.emplace(e.id(), std::make_pair(e, out));
    return out;
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

  static bool is_num(const Expr &e, long v) { return e.is_num() && e.value() == v; }

  static Expr fold_num(const Rational &q, Sort s, const Expr &fallback) {
    if (s == Sort::Int && q.get_den() != 1) return fallback;
    return ex::num(q, s);
  }

  Expr rule(const Expr &e) {
    const auto &a = e.args();
    switch (e.op()) {
    case Op::Neg:
      if (a[0].is_num()) return ex::num(Rational(-a[0].value()), e.sort());
      if (a[0].op() == Op::Neg) return a[0].arg(0);
      return e;
    case Op::Add:
      if (a[0].is_num() && a[1].is_num()) return fold_num(a[0].value() + a[1].value(), e.sort(), e);
      if (is_num(a[0], 0)) return a[1];
      if (is_num(a[1], 0)) return a[0];
      return e;
    case Op::Sub:
      if (a[0].is_num() && a[1].is_num()) return fold_num(a[0].value() - a[1].value(), e.sort(), e);
      if (is_num(a[1], 0)) return a[0];
      if (is_num(a[0], 0)) return ex::neg(a[1]);
      if (a[0] == a[1]) return ex::num(0, e.sort());
      return e;
    case Op::Mul:
      if (a[0].is_num() && a[1].is_num()) return fold_num(a[0].value() * a[1].value(), e.sort(), e);
      if (is_num(a[0], 0) || is_num(a[1], 0)) return ex::num(0, e.sort());
      if (is_num(a[0], 1)) return a[1];
      if (is_num(a[1], 1)) return a[0];
      return e;
    case Op::Div:
      // x/0 is left alone: its meaning depends on the division mode.
      if (a[0].is_num() && a[1].is_num() && a[1].value() != 0)
        return fold_num(a[0].value() / a[1].value(), e.sort(), e);
      if (is_num(a[1], 1)) return a[0];
      return e;
    case Op::Eq:
    case Op::Neq: {
      bool is_eq = e.op() == Op::Eq;
      if (a[0] == a[1]) return ex::boolean(is_eq);
      if (a[0].is_num() && a[1].is_num()) return ex::boolean((a[0].value() == a[1].value()) == is_eq);
      bool c0 = a[0].is_true() || a[0].is_false();
      bool c1 = a[1].is_true() || a[1].is_false();
      if (c0 && c1) return ex::boolean((a[0].op() == a[1].op()) == is_eq);
      if (c0 || c1) {
        const Expr &lit = c0 ? a[0] : a[1];
        const Expr &other = c0 ? a[1] : a[0];
        return lit.is_true() == is_eq ? other : ex::lnot(other);
      }
      return e;
    }
    case Op::Lt:
      if (a[0].is_num() && a[1].is_num()) return ex::boolean(a[0].value() < a[1].value());
      if (a[0] == a[1]) return ex::fls();
      return e;
    case Op::Le:
      if (a[0].is_num() && a[1].is_num()) return ex::boolean(a[0].value() <= a[1].value());
      if (a[0] == a[1]) return ex::tru();
      return e;
    case Op::Not:
      switch (a[0].op()) {
      case Op::True: return ex::fls();
      case Op::False: return ex::tru();
      case Op::Not: return a[0].arg(0);
      case Op::Eq:
      case Op::Neq:
      case Op::Lt:
      case Op::Le: return complement(a[0]);
      default: return e;
      }
    case Op::And: return junction(e, true);
    case Op::Or: return junction(e, false);
    case Op::Implies:
      if (a[0].is_true()) return a[1];
      if (a[0].is_false() || a[1].is_true()) return ex::tru();
      if (a[1].is_false()) return ex::lnot(a[0]);
      if (a[0] == a[1]) return ex::tru();
      return e;
    case Op::Ite:
      if (a[0].is_true()) return a[1];
      if (a[0].is_false()) return a[2];
      if (a[1] == a[2]) return a[1];
      if (a[1].is_true() && a[2].is_false()) return a[0];
      if (a[1].is_false() && a[2].is_true()) return ex::lnot(a[0]);
      return e;
    case Op::Exists: return exists_block(e);
    case Op::Forall: return forall_block(e);
    default: return e;
    }
  }

  // And (is_and) or Or: flatten, drop units, dedup, detect complements.
  Expr junction(const Expr &e, bool is_and) {
    Op op = is_and ? Op::And : Op::Or;
    std::vector<Expr> parts;
    flatten(op, e, parts);
    std::vector<Expr> kept;
    ExprSet seen;
    std::map<Var, Rational> pinned;
    for (const auto &p : parts) {
      if (is_and ? p.is_true() : p.is_false()) continue;
      if (is_and ? p.is_false() : p.is_true()) return ex::boolean(!is_and);
      if (!seen.insert(p).second) continue;
      kept.push_back(p);
      if (is_and && p.op() == Op::Eq) {
        const Expr &l = p.arg(0), &r = p.arg(1);
        const Expr *v = l.is_var() && r.is_num() ? &l : (r.is_var() && l.is_num() ? &r : nullptr);
        if (v) {
          const Rational &q = (v == &l ? r : l).value();
          auto [it, fresh] = pinned.emplace(v->var(), q);
          if (!fresh && it->second != q) return ex::fls();
        }
      }
    }
    for (const auto &p : kept)
      if (seen.count(complement(p))) return ex::boolean(!is_and);
    if (kept.empty()) return ex::boolean(is_and);
    return is_and ? ex::conj(kept) : ex::disj(kept);
  }

  // Renames a lifted binder when its name is already bound or free nearby.
  Var lift_binder(const Var &z, Expr &body, const VarList &vars, const VarSet &outer) {
    auto clash = [&](const Var &v) { return v.name == z.name; };
    if (std::none_of(vars.begin(), vars.end(), clash) && std::none_of(outer.begin(), outer.end(), clash)) return z;
    Var fresh = names_.fresh(z);
    body = substitute(body, {{z, ex::var(fresh)}}, &names_);
    return fresh;
  }

  // One-point candidate: `v = t` or `t = v` with v bound and not in t.
  std::optional<std::pair<Var, Expr>> one_point(const Expr &c, const VarList &vars) {
    if (c.op() == Op::Eq) {
      for (int side = 0; side < 2; ++side) {
        const Expr &l = c.arg(side), &r = c.arg(1 - side);
        if (l.is_var() && var_in(l.var(), vars) && !r.occurs_free(l.var())) return std::make_pair(l.var(), r);
      }
    }
    if (c.is_var() && var_in(c.var(), vars)) return std::make_pair(c.var(), ex::tru());
    if (c.op() == Op::Not && c.arg(0).is_var() && var_in(c.arg(0).var(), vars))
      return std::make_pair(c.arg(0).var(), ex::fls());
    return std::nullopt;
  }

  void absorb_conj(const Expr &x, VarList &vars, std::vector<Expr> &out, const VarSet &outer) {
    if (x.op() == Op::And) {
      absorb_conj(x.arg(0), vars, out, outer);
      absorb_conj(x.arg(1), vars, out, outer);
    } else if (x.op() == Op::Exists) {
      Expr body = x.arg(0);
      vars.push_back(lift_binder(x.var(), body, vars, outer));
      absorb_conj(body, vars, out, outer);
    } else {
      Expr s = simp(x);
      if (s != x && (s.op() == Op::And || s.op() == Op::Exists))
        absorb_conj(s, vars, out, outer);
      else
        out.push_back(s);
    }
  }

  static VarList used_vars(const VarList &vars, const std::vector<Expr> &parts) {
    VarList out;
    for (const auto &v : vars)
      if (std::any_of(parts.begin(), parts.end(), [&](const Expr &p) { return p.occurs_free(v); })) out.push_back(v);
    return out;
  }

  // Groups conjuncts by shared bound variables; var-free ones go to `outside`.
  static std::vector<std::pair<VarList, std::vector<Expr>>> components(const VarList &vars,
                                                                      const std::vector<Expr> &parts,
                                                                      std::vector<Expr> &outside) {
    std::vector<std::size_t> parent(vars.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    std::vector<std::vector<std::size_t>> part_vars(parts.size());
    for (std::size_t p = 0; p < parts.size(); ++p) {
      for (std::size_t i = 0; i < vars.size(); ++i)
        if (parts[p].occurs_free(vars[i])) part_vars[p].push_back(i);
      for (std::size_t k = 1; k < part_vars[p].size(); ++k) {
        auto x = find(part_vars[p][0]), y = find(part_vars[p][k]);
        if (x != y) parent[std::max(x, y)] = std::min(x, y);
      }
    }
    std::map<std::size_t, std::size_t> slot;
    std::vector<std::pair<VarList, std::vector<Expr>>> groups;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      auto r = find(i);
      auto [it, fresh] = slot.emplace(r, groups.size());
      if (fresh) groups.emplace_back();
      groups[it->second].first.push_back(vars[i]);
    }
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (part_vars[p].empty())
        outside.push_back(parts[p]);
      else
        groups[slot.at(find(part_vars[p][0]))].second.push_back(parts[p]);
    }
    return groups;
  }

  Expr exists_block(const Expr &e) {
    const VarSet &outer = e.arg(0).free_vars();
    VarList vars{e.var()};
    std::vector<Expr> parts;
    absorb_conj(e.arg(0), vars, parts, outer);

    for (;;) {
      if (exhausted_) return e;
      std::vector<Expr> next;
      bool any_false = false;
      for (auto &p : parts) {
        if (p.is_false()) any_false = true;
        if (!p.is_true()) next.push_back(p);
      }
      if (any_false) return ex::fls();
      parts = std::move(next);

      std::optional<std::pair<Var, Expr>> hit;
      std::size_t at = 0;
      for (; at < parts.size() && !hit; ++at) hit = one_point(parts[at], vars);
      if (!hit) break;
      --at;
      tick();
      vars.erase(std::find(vars.begin(), vars.end(), hit->first));
      std::vector<Expr> rest;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i == at) continue;
        absorb_conj(substitute(parts[i], {{hit->first, hit->second}}, &names_), vars, rest, outer);
      }
      parts = std::move(rest);
    }

    vars = used_vars(vars, parts);
    if (vars.empty()) return ex::conj(parts);
    if (parts.size() == 1 && parts[0].op() == Op::Or) {
      std::vector<Expr> ds;
      flatten(Op::Or, parts[0], ds);
      std::vector<Expr> out;
      for (const auto &d : ds) out.push_back(ex::exists(used_vars(vars, {d}), d));
      return ex::disj(out);
    }
    std::vector<Expr> outside;
    auto groups = components(vars, parts, outside);
    for (auto &[gv, gp] : groups) outside.push_back(ex::exists(gv, ex::conj(gp)));
    return ex::conj(outside);
  }

  void absorb_hyp(const Expr &x, VarList &vars, std::vector<Expr> &hyps, const VarSet &outer) {
    if (x.op() == Op::And) {
      absorb_hyp(x.arg(0), vars, hyps, outer);
      absorb_hyp(x.arg(1), vars, hyps, outer);
    } else if (x.op() == Op::Exists) {
      // (exists z. H) => C  is  forall z. H => C
      Expr body = x.arg(0);
      vars.push_back(lift_binder(x.var(), body, vars, outer));
      absorb_hyp(body, vars, hyps, outer);
    } else {
      Expr s = simp(x);
      if (s != x && (s.op() == Op::And || s.op() == Op::Exists))
        absorb_hyp(s, vars, hyps, outer);
      else
        hyps.push_back(s);
    }
  }

  Expr absorb_concl(Expr c, VarList &vars, std::vector<Expr> &hyps, const VarSet &outer) {
    for (;;) {
      if (c.op() == Op::Forall) {
        Expr body = c.arg(0);
        vars.push_back(lift_binder(c.var(), body, vars, outer));
        c = body;
      } else if (c.op() == Op::Implies) {
        absorb_hyp(c.arg(0), vars, hyps, outer);
        c = c.arg(1);
      } else {
        Expr s = simp(c);
        if (s == c || (s.op() != Op::Forall && s.op() != Op::Implies)) return s;
        c = s;
      }
    }
  }

  Expr forall_block(const Expr &e) {
    const VarSet &outer = e.arg(0).free_vars();
    VarList vars{e.var()};
    std::vector<Expr> hyps;
    Expr concl = absorb_concl(e.arg(0), vars, hyps, outer);

    for (;;) {
      if (exhausted_) return e;
      if (concl.is_true()) return ex::tru();
      std::vector<Expr> next;
      for (auto &h : hyps) {
        if (h.is_false() || h == concl) return ex::tru();
        if (!h.is_true()) next.push_back(h);
      }
      hyps = std::move(next);

      std::optional<std::pair<Var, Expr>> hit;
      std::size_t at = 0;
      for (; at < hyps.size() && !hit; ++at) hit = one_point(hyps[at], vars);
      if (!hit) break;
      --at;
      tick();
      vars.erase(std::find(vars.begin(), vars.end(), hit->first));
      Substitution sigma{{hit->first, hit->second}};
      std::vector<Expr> rest;
      for (std::size_t i = 0; i < hyps.size(); ++i) {
        if (i == at) continue;
        absorb_hyp(substitute(hyps[i], sigma, &names_), vars, rest, outer);
      }
      hyps = std::move(rest);
      concl = absorb_concl(substitute(concl, sigma, &names_), vars, hyps, outer);
    }

    std::vector<Expr> all = hyps;
    all.push_back(concl);
    vars = used_vars(vars, all);
    auto wrap = [](const std::vector<Expr> &hs, const Expr &c) {
      return hs.empty() ? c : ex::implies(ex::conj(hs), c);
    };
    if (vars.empty()) return wrap(hyps, concl);

    std::vector<Expr> outside, inside;
    for (const auto &h : hyps) {
      bool bound = std::any_of(vars.begin(), vars.end(), [&](const Var &v) { return h.occurs_free(v); });
      (bound ? inside : outside).push_back(h);
    }
    bool concl_bound = std::any_of(vars.begin(), vars.end(), [&](const Var &v) { return concl.occurs_free(v); });
    if (!concl_bound) {
      // forall y. H(y) => C  is  (exists y. H(y)) => C
      outside.push_back(ex::exists(vars, ex::conj(inside)));
      return wrap(outside, concl);
    }
    return wrap(outside, ex::forall(vars, wrap(inside, concl)));
  }

  const SimplifyOptions &opts_;
  NameSupply &names_;
  std::uint64_t steps_ = 0;
  bool exhausted_ = false;
  std::unordered_map<const Expr::Node *, std::pair<Expr, Expr>> memo_;
};

} // namespace

SimplifyResult simplify_formula(const Expr &e, const SimplifyOptions &opts, NameSupply *names) {
  NameSupply local;
  if (!names) {
    local.reserve_all(e);
    names = &local;
  }
  Simplifier s(opts, *names);
  Expr cur = e;
  for (;;) {
    Expr next = s.run(cur);
    if (next == cur || s.exhausted()) {
      cur = next;
      break;
    }
    cur = next;
  }
  return {cur, s.steps(), s.exhausted()};
}

Expr simplify_formula(const Expr &e) { return simplify_formula(e, SimplifyOptions{}).expr; }

} // namespace hbdpt
