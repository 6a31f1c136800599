#include "hbdpt/blocklib.hpp"

#include <algorithm>

namespace hbdpt {

namespace {

const std::vector<std::string> kRelOps{"lt", "le", "gt", "ge", "eq", "ne"};

Var real(const char *n) { return Var{n, Sort::Real}; }
Expr rv(const char *n) { return ex::var(n); }

} // namespace

const std::vector<BlockKindInfo> &block_kinds() {
  static const std::vector<BlockKindInfo> kinds{
      {"Constant", "[() -> c]", {"value"}, {"value"}},
      {"Add", "[x, y -> x + y]", {}, {}},
      {"Sub", "[x, y -> x - y]", {}, {}},
      {"Gain", "[x -> k * x]", {"k"}, {"k"}},
      {"Product", "[x, y -> x * y]", {}, {}},
      {"Div", "{x, y : y != 0} ; [x, y -> x / y]", {}, {}},
      {"UnitDelay", "[x, s -> s, x]", {"init"}, {}},
      {"Integrator", "[x, s -> s, s + (x * dt)]", {"dt", "init"}, {}},
      {"Split", "[x -> x, ..., x]", {"fanout"}, {}},
      {"Scope", "[x -> x]", {}, {}},
      {"Id", "[x -> x]", {}, {}},
      {"Min", "[x, y -> ite(x <= y, x, y)]", {}, {}},
      {"Max", "[x, y -> ite(y <= x, x, y)]", {}, {}},
      {"Switch", "[x, c, y -> ite(threshold <= c, x, y)]", {"threshold"}, {}},
      {"RelationalOp", "[x, y -> ite(x op y, 1, 0)]", {"op"}, {"op"}},
  };
  return kinds;
}

const BlockKindInfo *find_block_kind(std::string_view name) {
  for (const auto &k : block_kinds())
    if (k.name == name) return &k;
  return nullptr;
}

Rational BlockType::param(const std::string &name) const {
  auto it = params.find(name);
  if (it == params.end()) throw Error(ErrorCode::MissingParam, kind + "." + name);
  return parse_rational(it->second);
}

const std::string &BlockType::text_param(const std::string &name) const {
  auto it = params.find(name);
  if (it == params.end()) throw Error(ErrorCode::MissingParam, kind + "." + name);
  return it->second;
}

BlockType make_block_type(const std::string &kind, const std::map<std::string, std::string> &params,
                          std::optional<std::size_t> given_outputs, const BlockDefaults &defaults) {
  const BlockKindInfo *info = find_block_kind(kind);
  if (!info) throw Error(ErrorCode::UnsupportedBlock, "'" + kind + "'");
  for (const auto &[k, v] : params)
    if (std::find(info->params.begin(), info->params.end(), k) == info->params.end())
      throw Error(ErrorCode::UnsupportedBlock, kind + " has no parameter '" + k + "'");
  for (const auto &r : info->required)
    if (!params.count(r)) throw Error(ErrorCode::MissingParam, kind + "." + r);

  BlockType b;
  b.kind = kind;
  b.params = params;
  auto numeric = [&](const std::string &p) {
    if (!b.params.count(p)) return;
    try {
      b.params[p] = rational_to_string(parse_rational(b.params[p]));
    } catch (const Error &) {
      throw Error(ErrorCode::SchemaError, kind + "." + p + " must be a number, got '" + b.params[p] + "'");
    }
  };
  for (const char *p : {"value", "k", "dt", "init", "threshold"}) numeric(p);

  if (kind == "Constant") {
    b.inputs = 0;
    b.outputs = 1;
  } else if (kind == "Add" || kind == "Sub" || kind == "Product" || kind == "Div" || kind == "Min" ||
             kind == "Max" || kind == "RelationalOp") {
    b.inputs = 2;
    b.outputs = 1;
  } else if (kind == "Gain" || kind == "Scope" || kind == "Id") {
    b.inputs = 1;
    b.outputs = 1;
  } else if (kind == "UnitDelay" || kind == "Integrator") {
    b.inputs = 1;
    b.outputs = 1;
    b.states = 1;
    if (!b.params.count("init")) b.params["init"] = rational_to_string(defaults.init);
    if (kind == "Integrator" && !b.params.count("dt")) b.params["dt"] = rational_to_string(defaults.dt);
  } else if (kind == "Split") {
    std::size_t fanout = given_outputs.value_or(2);
    if (b.params.count("fanout")) {
      Rational q;
      try {
        q = parse_rational(b.params["fanout"]);
      } catch (const Error &) {
        throw Error(ErrorCode::SchemaError, "Split.fanout must be an integer");
      }
      if (q.get_den() != 1 || q < 1) throw Error(ErrorCode::SchemaError, "Split.fanout must be a positive integer");
      fanout = static_cast<std::size_t>(q.get_num().get_ui());
    }
    b.params["fanout"] = std::to_string(fanout);
    b.inputs = 1;
    b.outputs = fanout;
  } else if (kind == "Switch") {
    b.inputs = 3;
    b.outputs = 1;
    if (!b.params.count("threshold")) b.params["threshold"] = "0";
  }
  if (kind == "RelationalOp" && std::find(kRelOps.begin(), kRelOps.end(), b.params["op"]) == kRelOps.end())
    throw Error(ErrorCode::SchemaError, "RelationalOp.op must be one of lt, le, gt, ge, eq, ne");
  return b;
}

std::string atom_name(const BlockType &b) {
  const std::string &k = b.kind;
  if (k == "Constant") return "Const(" + b.text_param("value") + ")";
  if (k == "Gain") return "Gain(" + b.text_param("k") + ")";
  if (k == "Integrator") return "Integrator(" + b.text_param("dt") + ")";
  if (k == "Split") return b.outputs == 2 ? "Split" : "Split(" + std::to_string(b.outputs) + ")";
  if (k == "Switch") return "Switch(" + b.text_param("threshold") + ")";
  if (k == "RelationalOp") return "RelationalOp(" + b.text_param("op") + ")";
  return k;
}

AtomicPT block_atom(const BlockType &b) {
  const std::string &k = b.kind;
  VarList xy{real("x"), real("y")};
  Var z = real("z");
  if (k == "Constant") return AtomicPT::functional({}, {z}, {ex::num(b.param("value"))});
  if (k == "Add") return AtomicPT::functional(xy, {z}, {ex::add(rv("x"), rv("y"))});
  if (k == "Sub") return AtomicPT::functional(xy, {z}, {ex::sub(rv("x"), rv("y"))});
  if (k == "Product") return AtomicPT::functional(xy, {z}, {ex::mul(rv("x"), rv("y"))});
  if (k == "Div")
    return AtomicPT::functional(xy, {z}, {ex::div(rv("x"), rv("y"))}, ex::neq(rv("y"), ex::num(0)));
  if (k == "Gain") return AtomicPT::functional({real("x")}, {real("y")}, {ex::mul(ex::num(b.param("k")), rv("x"))});
  if (k == "Scope" || k == "Id") return AtomicPT::functional({real("x")}, {real("y")}, {rv("x")});
  if (k == "Min") return AtomicPT::functional(xy, {z}, {ex::ite(ex::le(rv("x"), rv("y")), rv("x"), rv("y"))});
  if (k == "Max") return AtomicPT::functional(xy, {z}, {ex::ite(ex::le(rv("y"), rv("x")), rv("x"), rv("y"))});
  if (k == "UnitDelay")
    return AtomicPT::functional({real("x"), real("s")}, {real("y"), real("s'")}, {rv("s"), rv("x")});
  if (k == "Integrator")
    return AtomicPT::functional({real("x"), real("s")}, {real("y"), real("s'")},
                                {rv("s"), ex::add(rv("s"), ex::mul(rv("x"), ex::num(b.param("dt"))))});
  if (k == "Split") {
    VarList outs;
    std::vector<Expr> bodies;
    for (std::size_t i = 0; i < b.outputs; ++i) {
      outs.push_back(Var{"y" + std::to_string(i + 1), Sort::Real});
      bodies.push_back(rv("x"));
    }
    return AtomicPT::functional({real("x")}, outs, bodies);
  }
  if (k == "Switch")
    return AtomicPT::functional({real("x"), real("c"), real("y")}, {z},
                                {ex::ite(ex::le(ex::num(b.param("threshold")), rv("c")), rv("x"), rv("y"))});
  if (k == "RelationalOp") {
    const std::string &op = b.text_param("op");
    Expr x = rv("x"), y = rv("y");
    Expr c = op == "lt"   ? ex::lt(x, y)
             : op == "le" ? ex::le(x, y)
             : op == "gt" ? ex::gt(x, y)
             : op == "ge" ? ex::ge(x, y)
             : op == "eq" ? ex::eq(x, y)
                          : ex::neq(x, y);
    return AtomicPT::functional(xy, {z}, {ex::ite(c, ex::num(1), ex::num(0))});
  }
  throw Error(ErrorCode::UnsupportedBlock, "'" + k + "'");
}

AtomicPT instantiate(const BlockType &b, const VarList &in, const VarList &out, const VarList &states) {
  if (in.size() != b.inputs || out.size() != b.outputs || states.size() != b.states)
    throw Error(ErrorCode::ArityMismatch, b.kind + " expects " + std::to_string(b.inputs) + " inputs, " +
                                              std::to_string(b.outputs) + " outputs and " +
                                              std::to_string(b.states) + " states");
  AtomicPT g = block_atom(b);
  VarList ins = in, outs = out;
  for (const auto &s : states) {
    ins.push_back(s);
    outs.push_back(Var{s.name + "'", s.sort});
  }
  Substitution sigma;
  for (std::size_t i = 0; i < ins.size(); ++i) sigma.emplace(g.inputs[i], ex::var(ins[i]));
  std::vector<Expr> bodies;
  for (const auto &body : *g.bodies) bodies.push_back(substitute(body, sigma));
  return AtomicPT::functional(ins, outs, bodies, substitute(g.pre, sigma));
}

std::vector<std::vector<std::size_t>> feedthrough(const BlockType &b) {
  std::vector<std::vector<std::size_t>> out(b.outputs);
  if (b.stateful()) return out;
  for (auto &deps : out)
    for (std::size_t i = 0; i < b.inputs; ++i) deps.push_back(i);
  return out;
}

std::vector<BlockPart> block_parts(const BlockType &b) {
  if (b.kind == "UnitDelay") return {{"Id_ud2", 0, {1}}, {"Id_ud1", 1, {0}}};
  if (b.kind == "Integrator") return {{"Id_int2", 0, {1}}, {"Integrator_1(" + b.text_param("dt") + ")", 1, {0, 1}}};
  if (b.kind == "Split") {
    std::vector<BlockPart> parts;
    for (std::size_t j = 0; j < b.outputs; ++j) parts.push_back({"Id_splt" + std::to_string(j + 1), j, {0}});
    return parts;
  }
  BlockPart whole{atom_name(b), 0, {}};
  for (std::size_t i = 0; i < b.inputs; ++i) whole.deps.push_back(i);
  return {whole};
}

namespace {

// `Name(args)` -> (Name, args)
std::pair<std::string, std::optional<std::string>> split_call(const std::string &name) {
  auto open = name.find('(');
  if (open == std::string::npos || name.back() != ')') return {name, std::nullopt};
  return {name.substr(0, open), name.substr(open + 1, name.size() - open - 2)};
}

} // namespace

std::optional<CptTerm> resolve_block_ref(const std::string &name) {
  auto [head, arg] = split_call(name);
  if (head.rfind("Id_", 0) == 0 && !arg) return CptTerm::id({Sort::Real});
  try {
    if (head == "Integrator_1" && arg) {
      Rational dt = parse_rational(*arg);
      return CptTerm::update_func({real("x"), real("s")},
                                  {ex::add(rv("s"), ex::mul(rv("x"), ex::num(dt)))});
    }
    static const std::map<std::string, std::pair<std::string, std::string>> with_arg{
        {"Const", {"Constant", "value"}},  {"Gain", {"Gain", "k"}},
        {"Integrator", {"Integrator", "dt"}}, {"Split", {"Split", "fanout"}},
        {"Switch", {"Switch", "threshold"}}, {"RelationalOp", {"RelationalOp", "op"}}};
    std::optional<BlockType> b;
    if (arg) {
      auto it = with_arg.find(head);
      if (it == with_arg.end()) return std::nullopt;
      b = make_block_type(it->second.first, {{it->second.second, *arg}});
    } else {
      if (head == "Const" || head == "Constant" || head == "Gain" || head == "RelationalOp") return std::nullopt;
      if (!find_block_kind(head)) return std::nullopt;
      b = make_block_type(head, {});
    }
    return as_term(block_atom(*b));
  } catch (const Error &) {
    return std::nullopt;
  }
}

nlohmann::json block_manifest() {
  auto kinds = nlohmann::json::array();
  for (const auto &k : block_kinds()) {
    std::map<std::string, std::string> sample;
    for (const auto &r : k.required) sample[r] = r == "op" ? "lt" : "1";
    BlockType b = make_block_type(k.name, sample);
    auto ft = nlohmann::json::array();
    for (const auto &deps : feedthrough(b)) ft.push_back(deps);
    kinds.push_back({{"kind", k.name},
                     {"transformer", k.summary},
                     {"inputs", b.inputs},
                     {"outputs", k.name == "Split" ? nlohmann::json("fanout (default: number of out ports)")
                                                   : nlohmann::json(b.outputs)},
                     {"states", b.states},
                     {"params", k.params},
                     {"required", k.required},
                     {"feedthrough", ft}});
  }
  return {{"version", 1}, {"blocks", kinds}};
}

} // namespace hbdpt
