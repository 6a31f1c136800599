#include "hbdpt/semantics.hpp"

#include <algorithm>
#include <unordered_map>

#include "hbdpt/blocklib.hpp"

namespace hbdpt {

std::uint64_t TupleSpace::size() const {
  std::uint64_t n = 1;
  for (const auto &c : carriers) n *= c.size();
  return n;
}

std::vector<Value> TupleSpace::decode(std::uint64_t code) const {
  std::vector<Value> out(carriers.size());
  for (std::size_t i = carriers.size(); i-- > 0;) {
    out[i] = carriers[i][code % carriers[i].size()];
    code /= carriers[i].size();
  }
  return out;
}

std::optional<std::uint64_t> TupleSpace::encode(const std::vector<Value> &tuple) const {
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < carriers.size(); ++i) {
    auto it = std::find(carriers[i].begin(), carriers[i].end(), tuple[i]);
    if (it == carriers[i].end()) return std::nullopt;
    code = code * carriers[i].size() + static_cast<std::uint64_t>(it - carriers[i].begin());
  }
  return code;
}

std::uint64_t RelSem::legal_count() const {
  return static_cast<std::uint64_t>(std::count(legal.begin(), legal.end(), 1));
}

namespace {

TupleSpace make_space(const std::vector<Sort> &sorts, const SemOptions &opts) {
  TupleSpace s;
  s.sorts = sorts;
  std::uint64_t n = 1;
  for (auto so : sorts) {
    s.carriers.push_back(opts.domain.carrier(so));
    if (s.carriers.back().empty()) throw Error(ErrorCode::SpaceTooLarge, "empty carrier");
    n *= s.carriers.back().size();
    if (n > opts.cap)
      throw Error(ErrorCode::SpaceTooLarge, "tuple space over " + std::to_string(sorts.size()) +
                                                " ports exceeds the cap of " + std::to_string(opts.cap));
  }
  return s;
}

RelSem empty_sem(const std::vector<Sort> &in, const std::vector<Sort> &out, const SemOptions &opts) {
  RelSem r;
  r.in_space = make_space(in, opts);
  r.out_space = make_space(out, opts);
  r.legal.assign(r.in_space.size(), 0);
  r.rel.assign(r.in_space.size(), {});
  return r;
}

Env env_of(const VarList &vars, const std::vector<Value> &vals) {
  Env e;
  for (std::size_t i = 0; i < vars.size(); ++i) e[vars[i].name] = vals[i];
  return e;
}

void sort_unique(std::vector<std::uint64_t> &v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

RelSem identity_sem(const std::vector<Sort> &sorts, const SemOptions &opts) {
  RelSem r = empty_sem(sorts, sorts, opts);
  for (std::uint64_t x = 0; x < r.in_space.size(); ++x) {
    r.legal[x] = 1;
    r.rel[x] = {x};
  }
  return r;
}

RelSem atom_sem(const VarList &in, const VarList &out, const Expr &pre, const Expr &rel,
                const std::vector<Expr> *bodies, const SemOptions &opts) {
  RelSem r = empty_sem(sorts_of(in), sorts_of(out), opts);
  const auto &dom = opts.domain;
  for (std::uint64_t x = 0; x < r.in_space.size(); ++x) {
    Env env = env_of(in, r.in_space.decode(x));
    r.legal[x] = eval_bool(pre, env, dom, DivisionMode::Total);
    if (bodies) {
      std::vector<Value> y;
      for (const auto &b : *bodies) y.push_back(eval(b, env, dom, DivisionMode::Total));
      // Values outside the carrier are outside the finite model.
      if (auto c = r.out_space.encode(y)) r.rel[x].push_back(*c);
      continue;
    }
    for (std::uint64_t y = 0; y < r.out_space.size(); ++y) {
      Env full = env;
      auto vals = r.out_space.decode(y);
      for (std::size_t i = 0; i < out.size(); ++i) full[out[i].name] = vals[i];
      if (eval_bool(rel, full, dom, DivisionMode::Total)) r.rel[x].push_back(y);
    }
  }
  return r;
}

RelSem serial_sem(const RelSem &s, const RelSem &t, const SemOptions &opts) {
  RelSem r = empty_sem(s.in_space.sorts, t.out_space.sorts, opts);
  for (std::uint64_t x = 0; x < r.in_space.size(); ++x) {
    bool ok = s.legal[x];
    for (auto y : s.rel[x]) {
      ok = ok && t.legal[y];
      r.rel[x].insert(r.rel[x].end(), t.rel[y].begin(), t.rel[y].end());
    }
    r.legal[x] = ok;
    sort_unique(r.rel[x]);
  }
  return r;
}

RelSem parallel_sem(const RelSem &a, const RelSem &b, const SemOptions &opts) {
  std::vector<Sort> in = a.in_space.sorts, out = a.out_space.sorts;
  in.insert(in.end(), b.in_space.sorts.begin(), b.in_space.sorts.end());
  out.insert(out.end(), b.out_space.sorts.begin(), b.out_space.sorts.end());
  RelSem r = empty_sem(in, out, opts);
  std::uint64_t nb_in = b.in_space.size(), nb_out = b.out_space.size();
  for (std::uint64_t x1 = 0; x1 < a.in_space.size(); ++x1)
    for (std::uint64_t x2 = 0; x2 < nb_in; ++x2) {
      std::uint64_t x = x1 * nb_in + x2;
      r.legal[x] = a.legal[x1] && b.legal[x2];
      for (auto y1 : a.rel[x1])
        for (auto y2 : b.rel[x2]) r.rel[x].push_back(y1 * nb_out + y2);
    }
  return r;
}

// feedback: legal x iff some u is legal and every first output reachable
// from a legal u is itself legal; outputs are those of S at (v, x) for the
// reachable v.
RelSem feedback_sem(const RelSem &s, const SemOptions &opts) {
  std::vector<Sort> in(s.in_space.sorts.begin() + 1, s.in_space.sorts.end());
  std::vector<Sort> out(s.out_space.sorts.begin() + 1, s.out_space.sorts.end());
  RelSem r = empty_sem(in, out, opts);
  std::uint64_t nu = s.in_space.carriers[0].size();
  std::uint64_t nx = r.in_space.size(), ny = r.out_space.size();
  for (std::uint64_t x = 0; x < nx; ++x) {
    bool some = false;
    std::vector<char> reach(nu, 0);
    for (std::uint64_t u = 0; u < nu; ++u) {
      if (!s.legal[u * nx + x]) continue;
      some = true;
      for (auto vy : s.rel[u * nx + x]) reach[vy / ny] = 1;
    }
    bool ok = some;
    for (std::uint64_t a = 0; a < nu && ok; ++a)
      if (reach[a] && !s.legal[a * nx + x]) ok = false;
    r.legal[x] = ok;
    for (std::uint64_t v = 0; v < nu; ++v) {
      if (!reach[v]) continue;
      for (auto vy : s.rel[v * nx + x])
        if (vy / ny == v) r.rel[x].push_back(vy % ny);
    }
    sort_unique(r.rel[x]);
  }
  return r;
}

class SemEval {
public:
  SemEval(const Resolver &resolve, const SemOptions &opts) : resolve_(resolve), opts_(opts) {}

  RelSem go(const CptTerm &t) {
    switch (t.kind()) {
    case CptKind::Assert: {
      RelSem r = identity_sem(t.in_sorts(), opts_);
      for (std::uint64_t x = 0; x < r.in_space.size(); ++x)
        r.legal[x] = eval_bool(t.formula(), env_of(t.inputs(), r.in_space.decode(x)), opts_.domain, DivisionMode::Total);
      return r;
    }
    case CptKind::UpdateRel: return atom_sem(t.inputs(), t.outputs(), ex::tru(), t.formula(), nullptr, opts_);
    case CptKind::UpdateFunc: return atom_sem(t.inputs(), t.outputs(), ex::tru(), ex::tru(), &t.bodies(), opts_);
    case CptKind::Id: return identity_sem(t.in_sorts(), opts_);
    case CptKind::Serial: return serial_sem(go(t.left()), go(t.right()), opts_);
    case CptKind::Parallel: return parallel_sem(go(t.left()), go(t.right()), opts_);
    case CptKind::Feedback: return feedback_sem(go(t.body()), opts_);
    case CptKind::NamedRef: {
      if (auto it = memo_.find(t.name()); it != memo_.end()) return it->second;
      std::optional<CptTerm> body = resolve_ ? resolve_(t.name()) : std::nullopt;
      if (!body) body = resolve_block_ref(t.name());
      if (!body) throw Error(ErrorCode::UnresolvedRef, "no definition for " + t.name());
      RelSem r = go(*body);
      memo_.emplace(t.name(), r);
      return r;
    }
    }
    throw Error(ErrorCode::UnresolvedRef, "unknown term kind");
  }

private:
  const Resolver &resolve_;
  const SemOptions &opts_;
  std::map<std::string, RelSem> memo_;
};

} // namespace

RelSem rel_sem(const CptTerm &t, const Resolver &resolve, const SemOptions &opts) {
  return SemEval(resolve, opts).go(t);
}

RelSem rel_sem(const AtomicPT &a, const SemOptions &opts) {
  return atom_sem(a.inputs, a.outputs, a.pre, a.rel, a.bodies ? &*a.bodies : nullptr, opts);
}

bool equiv(const RelSem &a, const RelSem &b) {
  if (a.in_space.sorts != b.in_space.sorts || a.out_space.sorts != b.out_space.sorts ||
      a.in_space.carriers != b.in_space.carriers || a.out_space.carriers != b.out_space.carriers)
    throw Error(ErrorCode::SpaceMismatch, "the two denotations range over different tuple spaces");
  for (std::uint64_t x = 0; x < a.legal.size(); ++x) {
    if (a.legal[x] != b.legal[x]) return false;
    if (a.legal[x] && a.rel[x] != b.rel[x]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Simulation

std::map<std::string, Rational> initial_states(const Diagram &flat) {
  std::map<std::string, Rational> out;
  for (const auto &b : flat.blocks)
    if (b.type && b.type->stateful()) out[b.id + ".s"] = b.type->param("init");
  return out;
}

Trace simulate(const Diagram &flat, const std::vector<Env> &inputs, std::size_t steps) {
  if (inputs.size() < steps) throw Error(ErrorCode::ArityMismatch, "fewer input rows than steps");
  struct Step {
    const BlockInstance *block;
    AtomicPT atom;
    std::size_t data_outputs;
  };
  std::vector<Step> order;
  auto sched = schedule(flat);
  for (const auto &b : sched) {
    const BlockInstance *bi = flat.find(b.id);
    if (!bi || !bi->type) throw Error(ErrorCode::ValidationFailed, "block " + b.id + " has no type");
    VarList states;
    if (bi->type->stateful()) states.push_back(Var{bi->id + ".s", Sort::Real});
    order.push_back({bi, instantiate(*bi->type, bi->in, bi->out, states), bi->type->outputs});
  }
  Env state;
  for (const auto &[k, v] : initial_states(flat)) state[k] = v;
  Trace trace;
  auto fail = [](std::size_t step, const std::string &id) {
    return Error(ErrorCode::DivisionByZero, "step " + std::to_string(step) + ", block " + id);
  };
  for (std::size_t k = 0; k < steps; ++k) {
    Env env = state;
    for (const auto &v : flat.inputs) {
      auto it = inputs[k].find(v.name);
      if (it == inputs[k].end()) throw Error(ErrorCode::UnboundVariable, "no value for input " + v.name);
      env[v.name] = it->second;
    }
    // Data outputs in schedule order, then every next state.
    for (const auto &s : order) {
      try {
        if (!eval_bool(s.atom.pre, env)) throw fail(k, s.block->id);
        for (std::size_t i = 0; i < s.data_outputs; ++i)
          env[s.atom.outputs[i].name] = eval((*s.atom.bodies)[i], env);
      } catch (const Error &e) {
        if (e.code() == ErrorCode::DivisionByZero) throw fail(k, s.block->id);
        throw;
      }
    }
    Env next;
    for (const auto &s : order)
      for (std::size_t i = s.data_outputs; i < s.atom.outputs.size(); ++i) {
        std::string name = s.atom.outputs[i].name;
        next[name.substr(0, name.size() - 1)] = eval((*s.atom.bodies)[i], env);
      }
    Env row;
    for (const auto &v : flat.outputs) row[v.name] = env.at(v.name);
    trace.push_back(std::move(row));
    state = std::move(next);
  }
  return trace;
}

Trace iterate(const AtomicPT &a, const std::map<std::string, Rational> &init, const std::vector<Env> &inputs) {
  if (!a.bodies) throw Error(ErrorCode::SchemaError, "iterate needs a functional transformer");
  // Inputs X paired with outputs X' are state.
  std::map<std::string, std::size_t> next_of;
  std::vector<char> is_state_out(a.outputs.size(), 0);
  for (const auto &v : a.inputs)
    for (std::size_t j = 0; j < a.outputs.size(); ++j)
      if (a.outputs[j].name == v.name + "'") {
        next_of[v.name] = j;
        is_state_out[j] = 1;
      }
  Env state;
  for (const auto &[name, j] : next_of) {
    auto it = init.find(name);
    state[name] = it == init.end() ? Rational(0) : it->second;
  }
  Trace trace;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Env env = state;
    for (const auto &v : a.inputs) {
      if (next_of.count(v.name)) continue;
      auto it = inputs[k].find(v.name);
      if (it == inputs[k].end()) throw Error(ErrorCode::UnboundVariable, "no value for input " + v.name);
      env[v.name] = it->second;
    }
    bool legal = false;
    try {
      legal = eval_bool(a.pre, env);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::DivisionByZero) throw;
    }
    if (!legal) throw Error(ErrorCode::PreconditionViolated, "step " + std::to_string(k));
    Env row;
    std::vector<Value> outs;
    for (std::size_t j = 0; j < a.outputs.size(); ++j) outs.push_back(eval((*a.bodies)[j], env));
    for (std::size_t j = 0; j < a.outputs.size(); ++j)
      if (!is_state_out[j]) row[a.outputs[j].name] = outs[j];
    for (const auto &[name, j] : next_of) state[name] = outs[j];
    trace.push_back(std::move(row));
  }
  return trace;
}

std::string trace_csv(const Trace &t, const VarList &ports) {
  std::string out = "step,port,value,decimal\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    for (const auto &p : ports) {
      auto it = t[k].find(p.name);
      if (it == t[k].end()) continue;
      std::string dec;
      if (const auto *q = std::get_if<Rational>(&it->second)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", rational_to_double(*q));
        dec = buf;
      } else {
        dec = value_to_string(it->second);
      }
      out += std::to_string(k) + "," + p.name + "," + value_to_string(it->second) + "," + dec + "\n";
    }
  return out;
}

} // namespace hbdpt
