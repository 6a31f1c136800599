#include "hbdpt/translate.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace hbdpt {

std::string_view strategy_name(Strategy s) {
  switch (s) {
  case Strategy::FP: return "FP";
  case Strategy::IT: return "IT";
  case Strategy::NFBT: return "NFBT";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  std::string t;
  for (char c : text) t += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (t == "FP") return Strategy::FP;
  if (t == "IT") return Strategy::IT;
  if (t == "NFBT") return Strategy::NFBT;
  return std::nullopt;
}

namespace {

bool has(const VarList &vs, const Var &v) {
  return std::any_of(vs.begin(), vs.end(), [&](const Var &x) { return x.name == v.name; });
}

VarList common(const VarList &a, const VarList &b) {
  VarList out;
  for (const auto &v : a)
    if (has(b, v)) out.push_back(v);
  return out;
}

VarList minus(const VarList &a, const VarList &b) {
  VarList out;
  for (const auto &v : a)
    if (!has(b, v)) out.push_back(v);
  return out;
}

VarList concat(VarList a, const VarList &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

VarList primed(const VarList &states) {
  VarList out;
  for (const auto &s : states) out.push_back(Var{s.name + "'", s.sort});
  return out;
}

CptTerm pad(const CptTerm &t, const VarList &extra) {
  return extra.empty() ? t : CptTerm::parallel(t, CptTerm::id(sorts_of(extra)));
}

// a ; [from -> to] ; b with identity reroutes elided.
CptTerm through(const CptTerm &a, const VarList &from, const VarList &to, const CptTerm &b) {
  if (is_identity_reroute(from, to)) return CptTerm::serial(a, b);
  return CptTerm::serial(CptTerm::serial(a, reroute(from, to)), b);
}

} // namespace

Interface interface_of(const Diagram &d) {
  VarList states = state_vars(d);
  return {concat(d.inputs, states), concat(d.outputs, primed(states))};
}

Component parallel_comp(const Component &a, const Component &b) {
  return {concat(a.in, b.in), concat(a.out, b.out), CptTerm::parallel(a.cpt, b.cpt)};
}

Component feedback_comp(const Component &a, const VarList *in_order, const VarList *out_order) {
  VarList fdbv = common(a.in, a.out);
  if (fdbv.empty()) throw Error(ErrorCode::NoFeedbackVars, "no port is both an input and an output");
  VarList res_in = in_order ? minus(*in_order, fdbv) : minus(a.in, fdbv);
  VarList res_out = out_order ? minus(*out_order, fdbv) : minus(a.out, fdbv);
  CptTerm t = a.cpt;
  VarList from = concat(fdbv, res_in);
  if (!is_identity_reroute(from, a.in)) t = CptTerm::serial(reroute(from, a.in), t);
  VarList to = concat(fdbv, res_out);
  if (!is_identity_reroute(a.out, to)) t = CptTerm::serial(t, reroute(a.out, to));
  for (std::size_t i = 0; i < fdbv.size(); ++i) t = CptTerm::feedback(t);
  return {res_in, res_out, t};
}

Component serial_comp(const Component &a, const Component &b) {
  VarList b_unc_in = minus(b.in, a.out);
  VarList a_unc_out = minus(a.out, b.in);
  // Unconnected outputs of A already lead: A ; (Id || B) needs no reroute.
  if (b_unc_in.empty() && !a_unc_out.empty() && is_identity_reroute(a.out, concat(a_unc_out, b.in))) {
    CptTerm rhs = CptTerm::parallel(CptTerm::id(sorts_of(a_unc_out)), b.cpt);
    return {a.in, concat(a_unc_out, b.out), CptTerm::serial(a.cpt, rhs)};
  }
  CptTerm lhs = pad(a.cpt, b_unc_in);
  CptTerm rhs = pad(b.cpt, a_unc_out);
  CptTerm t = through(lhs, concat(a.out, b_unc_in), concat(b.in, a_unc_out), rhs);
  return {concat(a.in, b_unc_in), concat(b.out, a_unc_out), t};
}

Component compose(const Component &a, const Component &b) {
  VarList a2b = common(a.out, b.in);
  VarList b2a = common(b.out, a.in);
  if (a2b.empty() && b2a.empty()) return parallel_comp(a, b);
  if (b2a.size() <= a2b.size()) {
    Component c = serial_comp(a, b);
    return b2a.empty() ? c : feedback_comp(c);
  }
  Component c = serial_comp(b, a);
  return a2b.empty() ? c : feedback_comp(c);
}

namespace {

CptTerm block_term(const BlockType &t) {
  if (t.kind == "Id") return CptTerm::id({Sort::Real});
  std::string name = atom_name(t);
  auto term = resolve_block_ref(name);
  if (!term) throw Error(ErrorCode::UnsupportedBlock, "'" + name + "'");
  return CptTerm::named(name, term->signature());
}

const BlockType &checked_type(const BlockInstance &b) {
  if (!b.type) throw Error(ErrorCode::ValidationFailed, "block '" + b.id + "': " + b.type_error);
  return *b.type;
}

} // namespace

Component block_component(const BlockInstance &b) {
  if (b.is_subsystem()) throw Error(ErrorCode::ValidationFailed, "'" + b.id + "' is a subsystem");
  const BlockType &t = checked_type(b);
  VarList states;
  if (t.stateful()) states.push_back(Var{b.id + ".s", Sort::Real});
  return {concat(b.in, states), concat(b.out, primed(states)), block_term(t)};
}

namespace {

using SubsystemComponent = std::function<Component(const BlockInstance &)>;
using Namer = std::function<Component(Component)>;

Component component_of(const BlockInstance &b, const SubsystemComponent &sub) {
  if (!b.is_subsystem()) return block_component(b);
  if (!sub) throw Error(ErrorCode::ValidationFailed, "subsystem '" + b.id + "' in a diagram expected to be flat");
  return sub(b);
}

Interface restrict(const Interface &iface, const Component &c) {
  return {common(iface.in, c.in), common(iface.out, c.out)};
}

// Reroutes a component into the interface order; unmatched outputs are dropped.
CptTerm align(const Component &c, const Interface &iface) {
  for (const auto &v : c.in)
    if (!has(iface.in, v)) throw Error(ErrorCode::ValidationFailed, "port '" + v.name + "' is not driven");
  for (const auto &v : iface.out)
    if (!has(c.out, v)) throw Error(ErrorCode::ValidationFailed, "output '" + v.name + "' is not produced");
  CptTerm t = c.cpt;
  if (!is_identity_reroute(iface.in, c.in)) t = CptTerm::serial(reroute(iface.in, c.in), t);
  if (!is_identity_reroute(c.out, iface.out)) t = CptTerm::serial(t, reroute(c.out, iface.out));
  return t;
}

Component combine_islands(const std::vector<Component> &parts) {
  Component acc = parts.at(0);
  for (std::size_t i = 1; i < parts.size(); ++i) acc = parallel_comp(acc, parts[i]);
  return acc;
}

using ComponentTable = std::unordered_map<std::string, Component>;

Component fp_island(const Diagram &island, const ComponentTable &table, const std::optional<Interface> &iface) {
  std::vector<Component> comps;
  for (const auto &b : toposort(island)) comps.push_back(table.at(b.id));
  Component acc = comps.at(0);
  for (std::size_t i = 1; i < comps.size(); ++i) acc = parallel_comp(acc, comps[i]);
  if (common(acc.in, acc.out).empty()) return acc;
  if (!iface) return feedback_comp(acc);
  // Interface order for the external ports; unlisted ones keep their place.
  VarList fd = common(acc.in, acc.out);
  VarList in_order = concat(common(iface->in, acc.in), minus(minus(acc.in, fd), iface->in));
  VarList out_order = common(iface->out, acc.out);
  return feedback_comp(acc, &in_order, &out_order);
}

Component it_island(const Diagram &island, const ComponentTable &table, const Namer &namer) {
  std::optional<Component> acc;
  for (const auto &b : toposort(island)) {
    const Component &c = table.at(b.id);
    if (!acc) {
      acc = c;
      continue;
    }
    acc = compose(*acc, c);
    if (namer) acc = namer(*acc);
  }
  return *acc;
}

CptTerm translate_level(const Diagram &d, Strategy s, const std::optional<Interface> &iface,
                        const SubsystemComponent &sub, const Namer &namer) {
  ComponentTable table;
  for (const auto &b : d.blocks) table.emplace(b.id, component_of(b, sub));
  std::vector<Component> parts;
  for (const auto &isl : islands(d)) {
    std::optional<Interface> local;
    if (iface) {
      // Ports touched by this island only.
      Component probe{{}, {}, CptTerm::id({})};
      for (const auto &b : isl.blocks) {
        const Component &c = table.at(b.id);
        probe.in = concat(probe.in, c.in);
        probe.out = concat(probe.out, c.out);
      }
      local = restrict(*iface, probe);
    }
    parts.push_back(s == Strategy::FP ? fp_island(isl, table, local) : it_island(isl, table, namer));
  }
  if (parts.empty()) {
    if (iface && !iface->out.empty()) throw Error(ErrorCode::ValidationFailed, "diagram has no blocks");
    return CptTerm::id(iface ? sorts_of(iface->in) : std::vector<Sort>{});
  }
  Component all = combine_islands(parts);
  if (!iface) return all.cpt;
  return align(all, *iface);
}

} // namespace

CptTerm translate_fp(const Diagram &flat, const std::optional<Interface> &iface) {
  return translate_level(flat, Strategy::FP, iface, nullptr, nullptr);
}

CptTerm translate_it(const Diagram &flat, const std::optional<Interface> &iface) {
  return translate_level(flat, Strategy::IT, iface, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Feedbackless translation

namespace {

struct Part {
  CptTerm term;
  VarList deps;
};

struct Chain {
  VarList inputs;
  CptTerm cpt;
};

class Nfbt {
public:
  explicit Nfbt(const Diagram &flat) {
    for (const auto &v : flat.inputs) sources_.insert(v.name);
    for (const auto &b : flat.blocks) {
      if (b.is_subsystem()) throw Error(ErrorCode::ValidationFailed, "NFBT expects a flat diagram");
      const BlockType &t = checked_type(b);
      VarList ins = b.in, outs = b.out;
      if (t.stateful()) {
        Var s{b.id + ".s", Sort::Real};
        sources_.insert(s.name);
        states_.push_back(s);
        ins.push_back(s);
        outs.push_back(Var{s.name + "'", Sort::Real});
      }
      for (const auto &part : block_parts(t)) {
        Part p{part_term(t, part.name), {}};
        for (auto i : part.deps) p.deps.push_back(ins.at(i));
        producer_.emplace(outs.at(part.output).name, std::move(p));
      }
    }
  }

  const VarList &states() const { return states_; }

  Chain build(const Var &w) {
    if (sources_.count(w.name)) return {{w}, CptTerm::id({w.sort})};
    auto it = producer_.find(w.name);
    if (it == producer_.end()) throw Error(ErrorCode::ValidationFailed, "wire '" + w.name + "' is not driven");
    if (!active_.insert(w.name).second)
      throw Error(ErrorCode::AlgebraicLoop, "instantaneous cycle through '" + w.name + "'");
    const Part &p = it->second;
    Chain out{{}, p.term};
    if (p.deps.size() == 1 && sources_.count(p.deps[0].name)) {
      out.inputs = {p.deps[0]};
    } else if (!p.deps.empty()) {
      std::optional<Chain> acc;
      for (const auto &d : p.deps) {
        Chain c = build(d);
        if (!acc) {
          acc = c;
        } else {
          acc->inputs = concat(acc->inputs, c.inputs);
          acc->cpt = CptTerm::parallel(acc->cpt, c.cpt);
        }
      }
      out = {acc->inputs, CptTerm::serial(acc->cpt, p.term)};
    }
    active_.erase(w.name);
    return out;
  }

private:
  static CptTerm part_term(const BlockType &t, const std::string &name) {
    if (name == atom_name(t)) return block_term(t);
    auto term = resolve_block_ref(name);
    if (!term) throw Error(ErrorCode::UnsupportedBlock, "'" + name + "'");
    return CptTerm::named(name, term->signature());
  }

  std::unordered_set<std::string> sources_;
  std::unordered_map<std::string, Part> producer_;
  std::unordered_set<std::string> active_;
  VarList states_;
};

bool id_like(const CptTerm &t) {
  if (t.kind() == CptKind::Id) return true;
  if (t.kind() != CptKind::NamedRef || t.in_sorts() != t.out_sorts()) return false;
  return t.name().rfind("Id_", 0) == 0 || t.name() == "Scope";
}

} // namespace

CptTerm eliminate_ids(const CptTerm &t) {
  if (id_like(t)) return CptTerm::id(t.in_sorts());
  switch (t.kind()) {
  case CptKind::Serial: {
    CptTerm a = eliminate_ids(t.left()), b = eliminate_ids(t.right());
    if (id_like(a)) return b;
    if (id_like(b)) return a;
    return CptTerm::serial(a, b);
  }
  case CptKind::Parallel: {
    CptTerm a = eliminate_ids(t.left()), b = eliminate_ids(t.right());
    if (id_like(a) && id_like(b)) {
      auto s = a.in_sorts();
      s.insert(s.end(), b.in_sorts().begin(), b.in_sorts().end());
      return CptTerm::id(s);
    }
    return CptTerm::parallel(a, b);
  }
  case CptKind::Feedback: return CptTerm::feedback(eliminate_ids(t.body()));
  default: return t;
  }
}

CptTerm translate_nfbt(const Diagram &flat, const std::optional<Interface> &iface, bool id_elim) {
  Nfbt n(flat);
  VarList targets = iface ? iface->out : concat(flat.outputs, primed(n.states()));
  std::optional<Chain> acc;
  for (const auto &w : targets) {
    Chain c = n.build(w);
    if (!acc) {
      acc = c;
    } else {
      acc->inputs = concat(acc->inputs, c.inputs);
      acc->cpt = CptTerm::parallel(acc->cpt, c.cpt);
    }
  }
  VarList from;
  if (iface) {
    from = iface->in;
  } else if (acc) {
    for (const auto &v : acc->inputs)
      if (!has(from, v)) from.push_back(v);
  }
  CptTerm t = [&] {
    if (!acc) return from.empty() ? CptTerm::id({}) : reroute(from, {});
    if (is_identity_reroute(from, acc->inputs)) return acc->cpt;
    return CptTerm::serial(reroute(from, acc->inputs), acc->cpt);
  }();
  return id_elim ? eliminate_ids(t) : t;
}

// ---------------------------------------------------------------------------
// Whole models

const Definition *TranslationUnit::find(const std::string &name) const {
  for (const auto &d : defs)
    if (d.name == name) return &d;
  return nullptr;
}

const Definition &TranslationUnit::top_def() const {
  const Definition *d = find(top);
  if (!d) throw Error(ErrorCode::UnresolvedRef, "'" + top + "'");
  return *d;
}

Resolver TranslationUnit::resolver() const {
  auto table = std::make_shared<std::unordered_map<std::string, CptTerm>>();
  for (const auto &d : defs) table->emplace(d.name, d.term);
  return [table](const std::string &name) -> std::optional<CptTerm> {
    if (auto it = table->find(name); it != table->end()) return it->second;
    return resolve_block_ref(name);
  };
}

namespace {

class ModelTranslator {
public:
  explicit ModelTranslator(const TranslationOptions &opts) : opts_(opts) {}

  TranslationUnit run(const Diagram &d) {
    auto diags = validate(d);
    for (const auto &dg : diags)
      if (dg.severity == Severity::Error) throw Error(ErrorCode::ValidationFailed, to_string(dg));
    std::string top;
    if (opts_.strategy == Strategy::NFBT) {
      top = nfbt_level(d);
    } else if (opts_.flat) {
      Interface iface = interface_of(d);
      top = emit(d.name, translate_level(flatten(d), opts_.strategy, iface, nullptr, namer()), iface);
    } else {
      top = hier_level(d);
    }
    unit_.top = top;
    return std::move(unit_);
  }

private:
  std::string unique(const std::string &want) {
    std::string name = want;
    for (int k = 2; used_.count(name) || resolve_block_ref(name) || name == "Id" || name == "feedback"; ++k)
      name = want + "_" + std::to_string(k);
    used_.insert(name);
    return name;
  }

  std::string emit(const std::string &want, const CptTerm &term, const Interface &iface) {
    std::string name = unique(want);
    unit_.defs.push_back({name, term, iface.in, iface.out});
    return name;
  }

  Namer namer() {
    if (!opts_.io || opts_.strategy != Strategy::IT) return nullptr;
    return [this](Component c) {
      std::string name = emit("ICC" + std::to_string(++icc_), c.cpt, {c.in, c.out});
      c.cpt = CptTerm::named(name, c.cpt.signature());
      return c;
    };
  }

  std::string hier_level(const Diagram &d) {
    Interface iface = interface_of(d);
    SubsystemComponent sub = [this](const BlockInstance &b) {
      auto [it, fresh] = done_.try_emplace(b.subsystem.get());
      if (fresh) it->second = hier_level(*b.subsystem);
      const std::string &name = it->second;
      const Definition &def = *unit_.find(name);
      VarList states = state_vars(*b.subsystem, b.id + ".");
      return Component{concat(b.in, states), concat(b.out, primed(states)),
                       CptTerm::named(name, def.term.signature())};
    };
    CptTerm t = translate_level(d, opts_.strategy, iface, sub, namer());
    return emit(d.name, t, iface);
  }

  std::string nfbt_level(const Diagram &d) {
    for (const auto &b : d.blocks)
      if (b.is_subsystem() && done_.try_emplace(b.subsystem.get()).second)
        done_[b.subsystem.get()] = nfbt_level(*b.subsystem);
    Interface iface = interface_of(d);
    return emit(d.name, translate_nfbt(flatten(d), iface, opts_.id_elim), iface);
  }

  TranslationOptions opts_;
  TranslationUnit unit_;
  std::set<std::string> used_;
  std::unordered_map<const Diagram *, std::string> done_;
  int icc_ = 0;
};

} // namespace

TranslationUnit translate_model(const Diagram &d, const TranslationOptions &opts) {
  ModelTranslator t(opts);
  return t.run(d);
}

std::string to_text(const TranslationUnit &u) {
  std::string out;
  for (const auto &d : u.defs) out += "def " + d.name + " = " + pretty(d.term) + "\n";
  return out;
}

nlohmann::json to_json(const TranslationUnit &u) {
  auto defs = nlohmann::json::array();
  auto names = [](const VarList &vs) {
    auto a = nlohmann::json::array();
    for (const auto &v : vs) a.push_back(v.name);
    return a;
  };
  for (const auto &d : u.defs)
    defs.push_back({{"name", d.name},
                    {"text", pretty(d.term)},
                    {"inputs", names(d.inputs)},
                    {"outputs", names(d.outputs)},
                    {"term", to_json(d.term)}});
  return {{"top", u.top}, {"definitions", defs}};
}

} // namespace hbdpt
