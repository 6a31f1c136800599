#include "hbdpt/simplify.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "hbdpt/blocklib.hpp"

namespace hbdpt {

namespace {

Expr and2(const Expr &a, const Expr &b) {
  if (a.is_true()) return b;
  if (b.is_true()) return a;
  return ex::land(a, b);
}

VarList concat(const VarList &a, const VarList &b) {
  VarList out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Substitution bind_vars(const VarList &from, const std::vector<Expr> &to) {
  Substitution s;
  for (std::size_t i = 0; i < from.size(); ++i) s.emplace(from[i], to[i]);
  return s;
}

std::vector<Expr> vars(const VarList &vs) {
  std::vector<Expr> out;
  for (const auto &v : vs) out.push_back(ex::var(v));
  return out;
}

std::vector<Expr> subst_all(const std::vector<Expr> &es, const Substitution &s, NameSupply *names) {
  std::vector<Expr> out;
  out.reserve(es.size());
  for (const auto &e : es) out.push_back(substitute(e, s, names));
  return out;
}

std::uint64_t formula_size(const AtomicPT &a) {
  std::uint64_t n = a.pre.size() + a.rel.size();
  return n < a.pre.size() ? UINT64_MAX : n;
}

std::string strip_suffix(const std::string &name) {
  auto pos = name.find_last_of('_');
  if (pos == std::string::npos || pos == 0 || pos + 1 == name.size()) return name;
  for (std::size_t i = pos + 1; i < name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return name;
  return name.substr(0, pos);
}

} // namespace

// ---------------------------------------------------------------------------
// Rules

namespace rules {

AtomicPT serial_rel(const AtomicPT &a, const AtomicPT &b) {
  // a's outputs become the bound intermediate values.
  Substitution s = bind_vars(b.inputs, vars(a.outputs));
  Expr pre = a.pre;
  Expr bpre = substitute(b.pre, s);
  if (!bpre.is_true()) pre = and2(pre, ex::forall(a.outputs, ex::implies(a.rel, bpre)));
  Expr rel = ex::exists(a.outputs, and2(a.rel, substitute(b.rel, s)));
  return AtomicPT::relational(a.inputs, b.outputs, rel, pre);
}

AtomicPT serial_func(const AtomicPT &a, const AtomicPT &b) {
  Substitution s = bind_vars(b.inputs, *a.bodies);
  return AtomicPT::functional(a.inputs, b.outputs, subst_all(*b.bodies, s, nullptr), and2(a.pre, substitute(b.pre, s)));
}

AtomicPT parallel_rel(const AtomicPT &a, const AtomicPT &b) {
  return AtomicPT::relational(concat(a.inputs, b.inputs), concat(a.outputs, b.outputs), and2(a.rel, b.rel),
                              and2(a.pre, b.pre));
}

AtomicPT parallel_func(const AtomicPT &a, const AtomicPT &b) {
  std::vector<Expr> bodies = *a.bodies;
  bodies.insert(bodies.end(), b.bodies->begin(), b.bodies->end());
  return AtomicPT::functional(concat(a.inputs, b.inputs), concat(a.outputs, b.outputs), bodies, and2(a.pre, b.pre));
}

bool feedback_func_applies(const AtomicPT &a) {
  return a.bodies && !a.inputs.empty() && !a.outputs.empty() && !a.bodies->front().occurs_free(a.inputs.front());
}

AtomicPT feedback_func(const AtomicPT &a) {
  if (!feedback_func_applies(a)) throw Error(ErrorCode::ArityMismatch, "functional feedback does not apply");
  Substitution s{{a.inputs.front(), a.bodies->front()}};
  std::vector<Expr> rest(a.bodies->begin() + 1, a.bodies->end());
  return AtomicPT::functional(VarList(a.inputs.begin() + 1, a.inputs.end()),
                              VarList(a.outputs.begin() + 1, a.outputs.end()), subst_all(rest, s, nullptr),
                              substitute(a.pre, s));
}

AtomicPT feedback_rel(const AtomicPT &a, NameSupply &names) {
  if (a.inputs.empty() || a.outputs.empty()) throw Error(ErrorCode::ArityMismatch, "feedback of an atom without ports");
  const Var &u = a.inputs.front();
  const Var &v = a.outputs.front();
  VarList xs(a.inputs.begin() + 1, a.inputs.end());
  VarList ys(a.outputs.begin() + 1, a.outputs.end());
  names.reserve_all(a.inputs);
  names.reserve_all(a.outputs);
  names.reserve_all(a.pre);
  names.reserve_all(a.rel);

  auto fresh_ys = [&] {
    VarList out;
    for (const auto &y : ys) out.push_back(names.fresh(y));
    return out;
  };
  // p(t, x)
  auto P = [&](const Expr &t) { return substitute(a.pre, {{u, t}}, &names); };
  // r(t, x; w, zs)
  auto R = [&](const Expr &t, const Expr &w, const std::vector<Expr> &zs) {
    Substitution s{{u, t}, {v, w}};
    for (std::size_t i = 0; i < ys.size(); ++i) s.emplace(ys[i], zs[i]);
    return substitute(a.rel, s, &names);
  };

  Var u1 = names.fresh(u), u2 = names.fresh(u), al = names.fresh(u);
  VarList y2 = fresh_ys();
  Expr reach_a = ex::exists(u2, ex::land(P(ex::var(u2)), ex::exists(y2, R(ex::var(u2), ex::var(al), vars(y2)))));
  Expr pre = ex::land(ex::exists(u1, P(ex::var(u1))), ex::forall(al, ex::implies(reach_a, P(ex::var(al)))));

  Var vv = names.fresh(v), u3 = names.fresh(u);
  VarList y3 = fresh_ys();
  Expr reach_v = ex::exists(u3, ex::land(P(ex::var(u3)), ex::exists(y3, R(ex::var(u3), ex::var(vv), vars(y3)))));
  Expr rel = ex::exists(vv, ex::land(reach_v, R(ex::var(vv), ex::var(vv), vars(ys))));
  return AtomicPT::relational(xs, ys, rel, pre);
}

} // namespace rules

AtomicPT simplify_atom(const AtomicPT &a, NameSupply *names) {
  SimplifyOptions o;
  AtomicPT out = a;
  out.pre = simplify_formula(a.pre, o, names).expr;
  if (a.bodies) {
    for (auto &b : *out.bodies) b = simplify_formula(b, o, names).expr;
    out.rel = functional_rel(out.outputs, *out.bodies);
  } else {
    out.rel = simplify_formula(a.rel, o, names).expr;
  }
  return out;
}

AtomicPT detect_functional(const AtomicPT &a) {
  if (a.bodies) return a;
  std::vector<Expr> rest = conjuncts(a.rel);
  std::map<Var, Expr> solved;
  auto is_open_output = [&](const Expr &e) {
    return e.is_var() && !solved.count(e.var()) &&
           std::find(a.outputs.begin(), a.outputs.end(), e.var()) != a.outputs.end();
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < rest.size() && !changed; ++i) {
      const Expr &c = rest[i];
      if (c.op() != Op::Eq) continue;
      for (int side = 0; side < 2 && !changed; ++side) {
        const Expr &lhs = c.arg(side), &rhs = c.arg(1 - side);
        if (!is_open_output(lhs) || rhs.occurs_free(lhs.var())) continue;
        Var o = lhs.var();
        Expr t = rhs;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
        Substitution s{{o, t}};
        for (auto &r : rest) r = substitute(r, s);
        for (auto &[k, val] : solved) val = substitute(val, s);
        solved.emplace(o, t);
        changed = true;
      }
    }
  }
  if (solved.size() != a.outputs.size()) return a;
  for (const auto &[k, val] : solved)
    for (const auto &o : a.outputs)
      if (val.occurs_free(o)) return a;
  // What is left must be trivially true: an output-free conjunct in the
  // relation marks inputs without outputs, which is not an assertion.
  for (const auto &r : rest)
    if (!simplify_formula(r).is_true()) return a;
  std::vector<Expr> bodies;
  for (const auto &o : a.outputs) bodies.push_back(solved.at(o));
  return AtomicPT::functional(a.inputs, a.outputs, bodies, a.pre);
}

// ---------------------------------------------------------------------------
// Expansion

std::size_t ExpansionTrace::count(std::string_view rule) const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [&](const auto &s) { return s.rule == rule; }));
}

std::int64_t ExpansionTrace::quantifiers_introduced() const {
  std::int64_t n = 0;
  for (const auto &s : steps) n += s.quantifiers;
  return n;
}

std::string ExpansionTrace::summary() const {
  std::ostringstream out;
  bool first = true;
  for (const char *r : {"R1", "R2", "R3", "R4", "R5", "R6"}) {
    if (auto n = count(r)) {
      out << (first ? "" : ", ") << r << " x" << n;
      first = false;
    }
  }
  if (first) out << "no rules";
  auto q = quantifiers_introduced();
  out << "; " << (q >= 0 ? "+" : "") << q << " quantifiers";
  if (budget_exhausted) out << "; budget exhausted";
  return out.str();
}

namespace {

struct Exhausted {
  AtomicPT partial;
};

class Expander {
public:
  Expander(const AtomDefs &defs, const Resolver &fallback, const ExpandOptions &opts)
      : defs_(defs), fallback_(fallback), opts_(opts), start_(std::chrono::steady_clock::now()) {}

  AtomicPT run(const CptTerm &t) { return go(t); }
  ExpansionTrace &trace() { return trace_; }

private:
  VarList fresh_list(const VarList &vs) {
    VarList out;
    for (const auto &v : vs) out.push_back(Var{names_.fresh_name(strip_suffix(v.name)), v.sort});
    return out;
  }

  // A copy of `a` whose ports are new names.
  AtomicPT fresh_copy(const AtomicPT &a) {
    names_.reserve_all(a.inputs);
    names_.reserve_all(a.outputs);
    names_.reserve_all(a.pre);
    names_.reserve_all(a.rel);
    std::map<std::string, std::string> m;
    for (const auto &v : a.inputs) m[v.name] = names_.fresh_name(strip_suffix(v.name));
    for (const auto &v : a.outputs) m[v.name] = names_.fresh_name(strip_suffix(v.name));
    return rename_ports(a, m);
  }

  AtomicPT leaf(const AtomicPT &a) {
    AtomicPT out = a.bodies ? a : detect_functional(a);
    check(out);
    return out;
  }

  AtomicPT go(const CptTerm &t) {
    switch (t.kind()) {
    case CptKind::Assert: {
      names_.reserve_all(t.formula());
      VarList in = fresh_list(t.inputs());
      std::map<Var, Var> m;
      for (std::size_t i = 0; i < in.size(); ++i) m.emplace(t.inputs()[i], in[i]);
      return leaf(AtomicPT::functional(in, fresh_list(t.inputs()), vars(in), rename(t.formula(), m, &names_)));
    }
    case CptKind::UpdateRel:
      return leaf(fresh_copy(AtomicPT::relational(t.inputs(), t.outputs(), t.formula())));
    case CptKind::UpdateFunc:
      return leaf(fresh_copy(AtomicPT::functional(t.inputs(), t.outputs(), t.bodies())));
    case CptKind::Id: {
      VarList in, out;
      for (auto s : t.in_sorts()) {
        in.push_back(Var{names_.fresh_name("i"), s});
        out.push_back(Var{names_.fresh_name("o"), s});
      }
      return leaf(AtomicPT::functional(in, out, vars(in)));
    }
    case CptKind::NamedRef: return leaf(fresh_copy(named(t)));
    case CptKind::Serial: {
      AtomicPT a = go(t.left()), b = go(t.right());
      if (a.bodies && b.bodies) return post("R2", rules::serial_func(a, b), a, b);
      return post("R1", rules::serial_rel(a, b), a, b);
    }
    case CptKind::Parallel: {
      AtomicPT a = go(t.left()), b = go(t.right());
      if (a.bodies && b.bodies) return post("R4", rules::parallel_func(a, b), a, b);
      return post("R3", rules::parallel_rel(a, b), a, b);
    }
    case CptKind::Feedback: {
      AtomicPT a = go(t.body());
      if (opts_.special_feedback && rules::feedback_func_applies(a)) return post("R5", rules::feedback_func(a), a);
      return post("R6", rules::feedback_rel(a, names_), a);
    }
    }
    throw Error(ErrorCode::UnresolvedRef, "unknown term kind");
  }

  const AtomicPT &named(const CptTerm &t) {
    const std::string &n = t.name();
    if (auto it = defs_.find(n); it != defs_.end()) return it->second;
    if (auto it = refs_.find(n); it != refs_.end()) return it->second;
    std::optional<CptTerm> body = fallback_ ? fallback_(n) : std::nullopt;
    if (!body) body = resolve_block_ref(n);
    if (!body) throw Error(ErrorCode::UnresolvedRef, "no definition for " + n);
    if (body->signature() != t.signature()) throw Error(ErrorCode::SortMismatch, "definition of " + n + " has another signature");
    AtomicPT a = go(*body);
    return refs_.emplace(n, std::move(a)).first->second;
  }

  AtomicPT post(const char *rule, AtomicPT r, const AtomicPT &a, const AtomicPT &b) {
    return finish(rule, std::move(r), printed_length(a) + printed_length(b),
                  a.quantifier_count() + b.quantifier_count());
  }
  AtomicPT post(const char *rule, AtomicPT r, const AtomicPT &a) {
    return finish(rule, std::move(r), printed_length(a), a.quantifier_count());
  }

  AtomicPT finish(const char *rule, AtomicPT r, std::uint64_t before, std::uint64_t q_before) {
    ExpansionStep step;
    step.rule = rule;
    step.before = before;
    step.quantifiers = static_cast<std::int64_t>(r.quantifier_count()) - static_cast<std::int64_t>(q_before);
    check(r);
    if (opts_.simplify) {
      r = simplify_atom(r, &names_);
      if (!r.bodies) r = detect_functional(r);
    } else if (!r.bodies) {
      r = detect_functional(r);
    }
    check(r);
    step.after = printed_length(r);
    trace_.steps.push_back(step);
    return r;
  }

  void check(const AtomicPT &r) {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (formula_size(r) > opts_.node_budget || secs > opts_.seconds) {
      trace_.budget_exhausted = true;
      throw Exhausted{r};
    }
  }

  const AtomDefs &defs_;
  const Resolver &fallback_;
  const ExpandOptions &opts_;
  std::chrono::steady_clock::time_point start_;
  NameSupply names_;
  ExpansionTrace trace_;
  std::map<std::string, AtomicPT> refs_;
};

} // namespace

Expansion expand(const CptTerm &t, const AtomDefs &defs, const Resolver &fallback, const ExpandOptions &opts) {
  Expander e(defs, fallback, opts);
  try {
    AtomicPT r = e.run(t);
    return {std::move(r), std::move(e.trace())};
  } catch (Exhausted &x) {
    return {std::move(x.partial), std::move(e.trace())};
  }
}

// ---------------------------------------------------------------------------
// Compatibility

std::string CompatStatus::text(const VarList &inputs, const VarList *shown) const {
  switch (verdict) {
  case Verdict::Compatible: {
    std::string out = "Compatible";
    if (inputs.empty()) return out;
    out += " (";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (i) out += ", ";
      auto it = witness.find(inputs[i].name);
      out += (shown ? (*shown)[i].name : inputs[i].name) + " = " + (it == witness.end() ? "?" : value_to_string(it->second));
    }
    return out + ")";
  }
  case Verdict::Incompatible:
    return domain_relative ? "Incompatible: no legal input in the domain" : "Incompatible: precondition is false";
  case Verdict::Unknown: break;
  }
  return "Unknown: no legal input found in the domain";
}

CompatStatus check_compat(const AtomicPT &a, const DomainConfig &dom, std::uint64_t cap) {
  CompatStatus st;
  Expr pre = simplify_formula(a.pre);
  if (pre.is_false()) {
    st.verdict = Verdict::Incompatible;
    return st;
  }
  std::vector<std::vector<Value>> carriers;
  std::uint64_t space = 1;
  bool complete = pre.quantifier_count() == 0;
  for (const auto &v : a.inputs) {
    carriers.push_back(dom.carrier(v.sort));
    complete = complete && !is_numeric(v.sort);
    space *= std::max<std::uint64_t>(carriers.back().size(), 1);
    if (space > cap) return st;
  }
  std::vector<std::size_t> idx(a.inputs.size(), 0);
  for (std::uint64_t n = 0; n < space; ++n) {
    Env env;
    for (std::size_t i = 0; i < idx.size(); ++i) env[a.inputs[i].name] = carriers[i][idx[i]];
    if (eval_bool(pre, env, dom, DivisionMode::Total)) {
      st.verdict = Verdict::Compatible;
      st.witness = std::move(env);
      return st;
    }
    for (std::size_t i = idx.size(); i-- > 0;) {
      if (++idx[i] < carriers[i].size()) break;
      idx[i] = 0;
    }
  }
  if (complete) {
    st.verdict = Verdict::Incompatible;
    st.domain_relative = true;
  }
  return st;
}

// ---------------------------------------------------------------------------
// Alpha-equivalence

namespace {

const char *op_tag(Op op) {
  switch (op) {
  case Op::Neg: return "neg";
  case Op::Add: return "+";
  case Op::Sub: return "-";
  case Op::Mul: return "*";
  case Op::Div: return "/";
  case Op::Eq: return "=";
  case Op::Neq: return "!=";
  case Op::Lt: return "<";
  case Op::Le: return "<=";
  case Op::And: return "&";
  case Op::Or: return "|";
  case Op::Not: return "!";
  case Op::Implies: return "=>";
  case Op::Ite: return "ite";
  case Op::Exists: return "E";
  case Op::Forall: return "A";
  default: return "?";
  }
}

void flatten_and(const Expr &e, std::vector<Expr> &out) {
  if (e.op() == Op::And) {
    flatten_and(e.arg(0), out);
    flatten_and(e.arg(1), out);
  } else {
    out.push_back(e);
  }
}

std::string canon(const Expr &e, std::map<Var, std::string> &names, int depth) {
  switch (e.op()) {
  case Op::Var: {
    auto it = names.find(e.var());
    return it == names.end() ? "free:" + e.var().name : it->second;
  }
  case Op::Num: return rational_to_string(e.value()) + ":" + std::string(sort_name(e.sort()));
  case Op::True: return "T";
  case Op::False: return "F";
  case Op::Unit: return "()";
  case Op::Exists:
  case Op::Forall: {
    std::string b = "b" + std::to_string(depth) + ":" + std::string(sort_name(e.var().sort));
    auto saved = names.find(e.var()) != names.end() ? std::optional<std::string>(names[e.var()]) : std::nullopt;
    names[e.var()] = b;
    std::string body = canon(e.arg(0), names, depth + 1);
    if (saved) names[e.var()] = *saved;
    else names.erase(e.var());
    return std::string(op_tag(e.op())) + " " + b + ".(" + body + ")";
  }
  case Op::And: {
    std::vector<Expr> parts;
    flatten_and(e, parts);
    std::vector<std::string> cs;
    for (const auto &p : parts) cs.push_back(canon(p, names, depth));
    std::sort(cs.begin(), cs.end());
    std::string out = "&(";
    for (const auto &c : cs) out += c + ";";
    return out + ")";
  }
  case Op::Add: {
    std::string l = canon(e.arg(0), names, depth), r = canon(e.arg(1), names, depth);
    if (r < l) std::swap(l, r);
    return "+(" + l + ";" + r + ")";
  }
  default: {
    std::string out = std::string(op_tag(e.op())) + "(";
    for (const auto &a : e.args()) out += canon(a, names, depth) + ";";
    return out + ")";
  }
  }
}

} // namespace

bool alpha_equiv(const AtomicPT &a, const AtomicPT &b) {
  if (a.in_sorts() != b.in_sorts() || a.out_sorts() != b.out_sorts()) return false;
  std::map<Var, std::string> na, nb;
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    na[a.inputs[i]] = nb[b.inputs[i]] = "i" + std::to_string(i);
  }
  for (std::size_t i = 0; i < a.outputs.size(); ++i) {
    na[a.outputs[i]] = nb[b.outputs[i]] = "o" + std::to_string(i);
  }
  if (canon(a.pre, na, 0) != canon(b.pre, nb, 0)) return false;
  if (a.bodies && b.bodies) {
    for (std::size_t i = 0; i < a.bodies->size(); ++i)
      if (canon((*a.bodies)[i], na, 0) != canon((*b.bodies)[i], nb, 0)) return false;
    return true;
  }
  return canon(a.rel, na, 0) == canon(b.rel, nb, 0);
}

// ---------------------------------------------------------------------------
// Whole units

const SimplifiedDef *SimplifyReport::find(const std::string &name) const {
  for (const auto &d : defs)
    if (d.name == name) return &d;
  return nullptr;
}

const SimplifiedDef *SimplifyReport::top_def() const {
  const SimplifiedDef *d = find(top);
  return d && !d->trace.budget_exhausted ? d : nullptr;
}

SimplifyReport simplify_unit(const TranslationUnit &u, const ExpandOptions &opts, const DomainConfig &dom) {
  SimplifyReport rep;
  rep.top = u.top;
  AtomDefs atoms;
  for (const auto &d : u.defs) {
    auto t0 = std::chrono::steady_clock::now();
    Expansion e = expand(d.term, atoms, {}, opts);
    SimplifiedDef sd;
    sd.name = d.name;
    sd.trace = std::move(e.trace);
    if (sd.trace.budget_exhausted) {
      sd.atom = std::move(e.result);
      sd.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rep.defs.push_back(std::move(sd));
      rep.budget_exhausted = true;
      return rep;
    }
    // Give the result the definition's port names.
    std::map<std::string, std::string> m;
    std::set<std::string> taken;
    for (std::size_t i = 0; i < d.inputs.size(); ++i) {
      m[e.result.inputs[i].name] = d.inputs[i].name;
      taken.insert(d.inputs[i].name);
    }
    for (std::size_t i = 0; i < d.outputs.size(); ++i) {
      std::string n = d.outputs[i].name;
      while (taken.count(n)) n += "'";
      m[e.result.outputs[i].name] = n;
      taken.insert(n);
    }
    sd.atom = rename_ports(e.result, m);
    sd.compat = check_compat(sd.atom, dom);
    sd.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    atoms[d.name] = sd.atom;
    rep.defs.push_back(std::move(sd));
  }
  return rep;
}

AtomicPT display_form(const AtomicPT &a) {
  std::set<std::string> ports;
  for (const auto &v : a.inputs) ports.insert(v.name);
  for (const auto &v : a.outputs) ports.insert(v.name);
  return rename_ports(a, short_names(ports));
}

std::string to_text(const SimplifyReport &r) {
  std::string out;
  for (const auto &d : r.defs) {
    if (d.trace.budget_exhausted) {
      out += d.name + " = \xE2\x88\x9E\n# " + d.name + ": " + d.trace.summary() + "\n";
      continue;
    }
    AtomicPT shown = display_form(d.atom);
    out += d.name + " = " + pretty(shown) + "\n";
    out += "# " + d.name + ": " + d.compat.text(d.atom.inputs, &shown.inputs) + "; " + d.trace.summary() + "\n";
  }
  return out;
}

nlohmann::json to_json(const SimplifyReport &r) {
  auto defs = nlohmann::json::array();
  for (const auto &d : r.defs) {
    nlohmann::json j;
    j["name"] = d.name;
    j["budget_exhausted"] = d.trace.budget_exhausted;
    j["trace"] = d.trace.summary();
    if (!d.trace.budget_exhausted) {
      AtomicPT shown = display_form(d.atom);
      j["text"] = pretty(shown);
      j["atom"] = to_json(shown);
      j["compat"] = d.compat.text(d.atom.inputs, &shown.inputs);
    }
    defs.push_back(j);
  }
  return {{"top", r.top}, {"budget_exhausted", r.budget_exhausted}, {"definitions", defs}};
}

} // namespace hbdpt
