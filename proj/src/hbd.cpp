#include "hbdpt/hbd.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace hbdpt {

const BlockInstance *Diagram::find(std::string_view id) const {
  for (const auto &b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

std::string_view diag_code_name(DiagCode c) {
  switch (c) {
  case DiagCode::AlgebraicLoop: return "AlgebraicLoop";
  case DiagCode::UnsupportedBlock: return "UnsupportedBlock";
  case DiagCode::MalformedBlock: return "MalformedBlock";
  case DiagCode::DanglingPort: return "DanglingPort";
  case DiagCode::DuplicateWire: return "DuplicateWire";
  }
  return "?";
}

std::string to_string(const Diagnostic &d) {
  return std::string(d.severity == Severity::Error ? "error" : "warning") + " " +
         std::string(diag_code_name(d.code)) + " at " + d.location + ": " + d.message;
}

bool has_errors(const std::vector<Diagnostic> &ds) {
  return std::any_of(ds.begin(), ds.end(), [](const Diagnostic &d) { return d.severity == Severity::Error; });
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

using nlohmann::json;

[[noreturn]] void schema(const std::string &path, const std::string &msg) {
  throw Error(ErrorCode::SchemaError, path + ": " + msg);
}

const std::set<std::string> kReserved{"true", "false", "ite", "exists", "forall", "feedback", "Id"};

bool valid_ident(const std::string &s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\'')) return false;
  return !kReserved.count(s);
}

// `name` or `name[n]`; the vector form expands to name_1..name_n.
void expand_port(const std::string &raw, const std::string &path, VarList &out) {
  auto open = raw.find('[');
  if (open == std::string::npos) {
    if (!valid_ident(raw)) schema(path, "invalid port name '" + raw + "'");
    out.push_back(Var{raw, Sort::Real});
    return;
  }
  std::string base = raw.substr(0, open);
  if (raw.back() != ']' || !valid_ident(base)) schema(path, "invalid vector port '" + raw + "'");
  std::string width = raw.substr(open + 1, raw.size() - open - 2);
  if (width.empty() || !std::all_of(width.begin(), width.end(), [](unsigned char c) { return std::isdigit(c); }))
    schema(path, "invalid vector width in '" + raw + "'");
  long n = std::stol(width);
  if (n < 1) schema(path, "vector width must be positive in '" + raw + "'");
  for (long i = 1; i <= n; ++i) out.push_back(Var{base + "_" + std::to_string(i), Sort::Real});
}

VarList port_list(const json &j, const char *key, const std::string &path) {
  VarList out;
  if (!j.contains(key)) return out;
  const json &arr = j.at(key);
  if (!arr.is_array()) schema(path + "/" + key, "expected an array of port names");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) schema(path + "/" + key + "/" + std::to_string(i), "expected a string");
    expand_port(arr[i].get<std::string>(), path + "/" + key + "/" + std::to_string(i), out);
  }
  std::unordered_set<std::string> seen;
  for (const auto &v : out)
    if (!seen.insert(v.name).second) schema(path + "/" + key, "duplicate port '" + v.name + "'");
  return out;
}

std::string param_text(const json &v, const std::string &path) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  schema(path, "parameter values must be numbers or strings");
}

class NameBook {
public:
  explicit NameBook(const Diagram &d) {
    for (const auto &v : d.inputs) used_.insert(v.name);
    for (const auto &v : d.outputs) used_.insert(v.name);
    for (const auto &b : d.blocks) {
      ids_.insert(b.id);
      for (const auto &v : b.in) used_.insert(v.name);
      for (const auto &v : b.out) used_.insert(v.name);
    }
  }
  std::string wire(const std::string &want) { return fresh(want, used_); }
  std::string id(const std::string &want) { return fresh(want, ids_); }

private:
  static std::string fresh(const std::string &want, std::unordered_set<std::string> &pool) {
    std::string name = want;
    for (int k = 2; pool.count(name); ++k) name = want + "_" + std::to_string(k);
    pool.insert(name);
    return name;
  }
  std::unordered_set<std::string> used_;
  std::unordered_set<std::string> ids_;
};

void normalize_fanout(Diagram &d, const BlockDefaults &defaults, const std::string &path) {
  struct Use {
    std::size_t block;  // SIZE_MAX for an external output
    std::size_t port;
  };
  std::map<std::string, std::vector<Use>> uses;
  std::vector<std::string> order;
  for (std::size_t b = 0; b < d.blocks.size(); ++b)
    for (std::size_t p = 0; p < d.blocks[b].in.size(); ++p) {
      auto &u = uses[d.blocks[b].in[p].name];
      if (u.empty()) order.push_back(d.blocks[b].in[p].name);
      u.push_back({b, p});
    }
  for (std::size_t p = 0; p < d.outputs.size(); ++p) {
    auto &u = uses[d.outputs[p].name];
    if (u.empty()) order.push_back(d.outputs[p].name);
    u.push_back({SIZE_MAX, p});
  }
  NameBook book(d);
  std::vector<std::pair<std::size_t, BlockInstance>> inserts;  // insert after index (SIZE_MAX: front)
  for (const auto &w : order) {
    const auto &u = uses[w];
    if (u.size() < 2) continue;
    std::optional<std::pair<std::size_t, std::size_t>> producer;
    for (std::size_t b = 0; b < d.blocks.size() && !producer; ++b)
      for (std::size_t p = 0; p < d.blocks[b].out.size(); ++p)
        if (d.blocks[b].out[p].name == w) producer = std::make_pair(b, p);
    bool from_input = std::any_of(d.inputs.begin(), d.inputs.end(), [&](const Var &v) { return v.name == w; });
    if (!producer && !from_input) continue;  // dangling; validate reports it
    bool to_output = u.back().block == SIZE_MAX;

    BlockInstance split;
    split.id = book.id("split_" + w);
    split.kind = "Split";
    std::string src = w;
    if (to_output) {
      if (!producer) schema(path, "external input '" + w + "' cannot also be an external output");
      src = book.wire(w + "_0");
      d.blocks[producer->first].out[producer->second].name = src;
    }
    split.in = {Var{src, Sort::Real}};
    std::size_t k = 0;
    for (const auto &use : u) {
      if (use.block == SIZE_MAX) {
        split.out.push_back(Var{w, Sort::Real});
        continue;
      }
      std::string name = book.wire(w + "_" + std::to_string(++k));
      d.blocks[use.block].in[use.port].name = name;
      split.out.push_back(Var{name, Sort::Real});
    }
    split.params = {{"fanout", std::to_string(split.out.size())}};
    split.type = make_block_type("Split", split.params, split.out.size(), defaults);
    inserts.emplace_back(producer ? producer->first : SIZE_MAX, std::move(split));
  }
  // Insert each Split right after its producer, keeping discovery order.
  std::vector<BlockInstance> blocks;
  for (const auto &[at, s] : inserts)
    if (at == SIZE_MAX) blocks.push_back(s);
  for (std::size_t b = 0; b < d.blocks.size(); ++b) {
    blocks.push_back(std::move(d.blocks[b]));
    for (const auto &[at, s] : inserts)
      if (at == b) blocks.push_back(s);
  }
  d.blocks = std::move(blocks);
}

Diagram parse_level(const json &j, const std::string &path, const BlockDefaults &inherited) {
  if (!j.is_object()) schema(path, "expected an object");
  Diagram d;
  if (!j.contains("name") || !j["name"].is_string()) schema(path + "/name", "missing diagram name");
  d.name = j["name"].get<std::string>();
  BlockDefaults defaults = inherited;
  if (j.contains("dt")) {
    try {
      defaults.dt = parse_rational(param_text(j["dt"], path + "/dt"));
    } catch (const Error &) {
      schema(path + "/dt", "dt must be a number");
    }
  }
  d.inputs = port_list(j, "inputs", path);
  d.outputs = port_list(j, "outputs", path);
  if (!j.contains("blocks") || !j["blocks"].is_array()) schema(path + "/blocks", "missing block list");
  std::unordered_set<std::string> ids;
  const json &blocks = j["blocks"];
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::string bp = path + "/blocks/" + std::to_string(i);
    const json &bj = blocks[i];
    if (!bj.is_object()) schema(bp, "expected an object");
    BlockInstance b;
    if (!bj.contains("id") || !bj["id"].is_string() || !valid_ident(bj["id"].get<std::string>()))
      schema(bp + "/id", "missing or invalid block id");
    b.id = bj["id"].get<std::string>();
    if (!ids.insert(b.id).second) schema(bp + "/id", "duplicate block id '" + b.id + "'");
    bool has_kind = bj.contains("kind"), has_sub = bj.contains("subsystem");
    if (has_kind == has_sub) schema(bp, "a block needs exactly one of 'kind' or 'subsystem'");
    b.in = port_list(bj, "in", bp);
    b.out = port_list(bj, "out", bp);
    if (has_sub) {
      b.subsystem = std::make_shared<const Diagram>(parse_level(bj["subsystem"], bp + "/subsystem", defaults));
    } else {
      if (!bj["kind"].is_string()) schema(bp + "/kind", "expected a string");
      b.kind = bj["kind"].get<std::string>();
      if (bj.contains("params")) {
        if (!bj["params"].is_object()) schema(bp + "/params", "expected an object");
        for (auto it = bj["params"].begin(); it != bj["params"].end(); ++it)
          b.params[it.key()] = param_text(it.value(), bp + "/params/" + it.key());
      }
      try {
        b.type = make_block_type(b.kind, b.params, b.out.size(), defaults);
      } catch (const Error &e) {
        b.type_error = e.what();
      }
    }
    d.blocks.push_back(std::move(b));
  }
  normalize_fanout(d, defaults, path);
  return d;
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t pos) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

} // namespace

Diagram parse_diagram(std::string_view text, const ParseOptions &opts) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                            e.what());
  }
  return parse_level(j, "", opts.defaults);
}

Diagram load_diagram(const std::filesystem::path &file, const ParseOptions &opts) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot read '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_diagram(ss.str(), opts);
  } catch (const Error &e) {
    throw Error(e.code(), file.string() + ": " + std::string(e.what()).substr(std::string(error_code_name(e.code())).size() + 2));
  }
}

nlohmann::json diagram_to_json(const Diagram &d) {
  auto names = [](const VarList &vs) {
    auto a = json::array();
    for (const auto &v : vs) a.push_back(v.name);
    return a;
  };
  json blocks = json::array();
  for (const auto &b : d.blocks) {
    json bj{{"id", b.id}, {"in", names(b.in)}, {"out", names(b.out)}};
    if (b.is_subsystem()) {
      bj["subsystem"] = diagram_to_json(*b.subsystem);
    } else {
      bj["kind"] = b.kind;
      if (!b.params.empty()) bj["params"] = b.params;
    }
    blocks.push_back(bj);
  }
  return {{"name", d.name}, {"inputs", names(d.inputs)}, {"outputs", names(d.outputs)}, {"blocks", blocks}};
}

// ---------------------------------------------------------------------------
// Feedthrough and state bookkeeping

namespace {

std::vector<std::vector<std::size_t>> diagram_feedthrough(const Diagram &d);

} // namespace

std::vector<std::vector<std::size_t>> block_feedthrough(const BlockInstance &b) {
  if (b.is_subsystem()) return diagram_feedthrough(*b.subsystem);
  if (!b.type) return std::vector<std::vector<std::size_t>>(b.out.size());
  return feedthrough(*b.type);
}

namespace {

std::vector<std::vector<std::size_t>> diagram_feedthrough(const Diagram &d) {
  // wire -> set of external input indices it instantaneously depends on
  std::unordered_map<std::string, std::set<std::size_t>> memo;
  std::unordered_map<std::string, std::pair<const BlockInstance *, std::size_t>> producer;
  std::vector<std::vector<std::vector<std::size_t>>> ft(d.blocks.size());
  for (std::size_t i = 0; i < d.blocks.size(); ++i) {
    ft[i] = block_feedthrough(d.blocks[i]);
    for (std::size_t p = 0; p < d.blocks[i].out.size(); ++p) producer[d.blocks[i].out[p].name] = {&d.blocks[i], i};
  }
  std::unordered_set<std::string> active;
  std::function<const std::set<std::size_t> &(const std::string &)> deps = [&](const std::string &w)
      -> const std::set<std::size_t> & {
    if (auto it = memo.find(w); it != memo.end()) return it->second;
    std::set<std::size_t> out;
    for (std::size_t i = 0; i < d.inputs.size(); ++i)
      if (d.inputs[i].name == w) out.insert(i);
    if (auto it = producer.find(w); it != producer.end() && !active.count(w)) {
      active.insert(w);
      const BlockInstance &b = *it->second.first;
      std::size_t port = 0;
      while (b.out[port].name != w) ++port;
      const auto &f = ft[it->second.second];
      if (port < f.size())
        for (std::size_t in : f[port]) {
          const auto &sub = deps(b.in[in].name);
          out.insert(sub.begin(), sub.end());
        }
      active.erase(w);
    }
    return memo[w] = std::move(out);
  };
  std::vector<std::vector<std::size_t>> result;
  for (const auto &o : d.outputs) {
    const auto &s = deps(o.name);
    result.emplace_back(s.begin(), s.end());
  }
  return result;
}

} // namespace

std::size_t state_count(const Diagram &d) {
  std::size_t n = 0;
  for (const auto &b : d.blocks) n += b.is_subsystem() ? state_count(*b.subsystem) : (b.type ? b.type->states : 0);
  return n;
}

VarList state_vars(const Diagram &d, const std::string &prefix) {
  VarList out;
  for (const auto &b : d.blocks) {
    if (b.is_subsystem()) {
      auto inner = state_vars(*b.subsystem, prefix + b.id + ".");
      out.insert(out.end(), inner.begin(), inner.end());
    } else if (b.type && b.type->stateful()) {
      out.push_back(Var{prefix + b.id + ".s", Sort::Real});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flattening and islands

namespace {

void flatten_into(const Diagram &d, const std::string &prefix, const std::map<std::string, std::string> &alias,
                  std::vector<BlockInstance> &out) {
  auto name = [&](const Var &v) {
    auto it = alias.find(v.name);
    return Var{it != alias.end() ? it->second : prefix + v.name, v.sort};
  };
  for (const auto &b : d.blocks) {
    VarList in, outs;
    for (const auto &v : b.in) in.push_back(name(v));
    for (const auto &v : b.out) outs.push_back(name(v));
    if (!b.is_subsystem()) {
      BlockInstance c = b;
      c.id = prefix + b.id;
      c.in = std::move(in);
      c.out = std::move(outs);
      out.push_back(std::move(c));
      continue;
    }
    const Diagram &sub = *b.subsystem;
    std::map<std::string, std::string> inner;
    for (std::size_t i = 0; i < sub.inputs.size() && i < in.size(); ++i) inner[sub.inputs[i].name] = in[i].name;
    for (std::size_t i = 0; i < sub.outputs.size() && i < outs.size(); ++i)
      inner[sub.outputs[i].name] = outs[i].name;
    flatten_into(sub, prefix + b.id + ".", inner, out);
  }
}

} // namespace

Diagram flatten(const Diagram &d) {
  Diagram f;
  f.name = d.name;
  f.inputs = d.inputs;
  f.outputs = d.outputs;
  std::map<std::string, std::string> alias;
  for (const auto &v : d.inputs) alias[v.name] = v.name;
  for (const auto &v : d.outputs) alias[v.name] = v.name;
  flatten_into(d, "", alias, f.blocks);
  return f;
}

bool is_flat(const Diagram &d) {
  return std::none_of(d.blocks.begin(), d.blocks.end(), [](const BlockInstance &b) { return b.is_subsystem(); });
}

std::vector<Diagram> islands(const Diagram &flat) {
  std::size_t n = flat.blocks.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  std::unordered_map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < n; ++i) {
    auto touch = [&](const Var &v) {
      auto [it, fresh] = owner.emplace(v.name, i);
      if (!fresh) parent[find(i)] = find(it->second);
    };
    for (const auto &v : flat.blocks[i].in) touch(v);
    for (const auto &v : flat.blocks[i].out) touch(v);
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> ordered;
  for (auto &[r, g] : groups) ordered.push_back(g);
  auto min_id = [&](const std::vector<std::size_t> &g) {
    std::string best = flat.blocks[g[0]].id;
    for (auto i : g) best = std::min(best, flat.blocks[i].id);
    return best;
  };
  std::sort(ordered.begin(), ordered.end(),
            [&](const auto &a, const auto &b) { return min_id(a) < min_id(b); });
  std::vector<Diagram> out;
  for (const auto &g : ordered) {
    Diagram isl;
    isl.name = flat.name;
    std::unordered_set<std::string> ins, outs;
    for (auto i : g) {
      isl.blocks.push_back(flat.blocks[i]);
      for (const auto &v : flat.blocks[i].in) ins.insert(v.name);
      for (const auto &v : flat.blocks[i].out) outs.insert(v.name);
    }
    for (const auto &v : flat.inputs)
      if (ins.count(v.name)) isl.inputs.push_back(v);
    for (const auto &v : flat.outputs)
      if (outs.count(v.name)) isl.outputs.push_back(v);
    out.push_back(std::move(isl));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordering

namespace {

struct Graph {
  std::vector<std::vector<std::size_t>> succ;
  std::vector<std::vector<std::size_t>> pred;
};

// Edges producer -> consumer; `instant` keeps only direct-feedthrough inputs.
Graph wire_graph(const Diagram &flat, bool instant) {
  std::size_t n = flat.blocks.size();
  std::unordered_map<std::string, std::size_t> producer;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto &v : flat.blocks[i].out) producer[v.name] = i;
  Graph g{std::vector<std::vector<std::size_t>>(n), std::vector<std::vector<std::size_t>>(n)};
  for (std::size_t c = 0; c < n; ++c) {
    const auto &b = flat.blocks[c];
    std::set<std::size_t> used;
    if (instant) {
      for (const auto &deps : block_feedthrough(b)) used.insert(deps.begin(), deps.end());
    } else {
      for (std::size_t i = 0; i < b.in.size(); ++i) used.insert(i);
    }
    for (auto i : used) {
      if (i >= b.in.size()) continue;
      auto it = producer.find(b.in[i].name);
      if (it == producer.end()) continue;
      g.succ[it->second].push_back(c);
      g.pred[c].push_back(it->second);
    }
  }
  return g;
}

std::vector<std::vector<std::size_t>> strongly_connected(const Graph &g) {
  std::size_t n = g.succ.size(), counter = 0;
  std::vector<std::size_t> index(n, SIZE_MAX), low(n, 0);
  std::vector<bool> on(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on[v] = true;
    for (auto w : g.succ[v]) {
      if (index[w] == SIZE_MAX) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> comp;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on[w] = false;
        comp.push_back(w);
      } while (w != v);
      bool self = std::find(g.succ[v].begin(), g.succ[v].end(), v) != g.succ[v].end();
      if (comp.size() > 1 || self) out.push_back(comp);
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] == SIZE_MAX) visit(v);
  return out;
}

// Loops are found on output ports so that a subsystem whose outputs do not
// all depend on all inputs is not reported spuriously.
std::vector<std::vector<std::string>> algebraic_loops(const Diagram &flat) {
  std::vector<std::pair<std::size_t, std::size_t>> ports;
  std::unordered_map<std::string, std::size_t> node_of;
  for (std::size_t b = 0; b < flat.blocks.size(); ++b)
    for (std::size_t j = 0; j < flat.blocks[b].out.size(); ++j) {
      node_of[flat.blocks[b].out[j].name] = ports.size();
      ports.emplace_back(b, j);
    }
  Graph g{std::vector<std::vector<std::size_t>>(ports.size()), std::vector<std::vector<std::size_t>>(ports.size())};
  for (std::size_t b = 0; b < flat.blocks.size(); ++b) {
    const auto &blk = flat.blocks[b];
    auto ft = block_feedthrough(blk);
    std::size_t base = 0;
    while (base < ports.size() && ports[base].first != b) ++base;
    for (std::size_t k = 0; k < ft.size() && k < blk.out.size(); ++k)
      for (auto i : ft[k]) {
        if (i >= blk.in.size()) continue;
        auto it = node_of.find(blk.in[i].name);
        if (it == node_of.end()) continue;
        g.succ[it->second].push_back(base + k);
        g.pred[base + k].push_back(it->second);
      }
  }
  std::vector<std::vector<std::string>> loops;
  for (const auto &comp : strongly_connected(g)) {
    std::set<std::string> ids;
    for (auto n : comp) ids.insert(flat.blocks[ports[n].first].id);
    loops.emplace_back(ids.begin(), ids.end());
  }
  std::sort(loops.begin(), loops.end());
  loops.erase(std::unique(loops.begin(), loops.end()), loops.end());
  return loops;
}

void require_loop_free(const Diagram &flat) {
  auto loops = algebraic_loops(flat);
  if (loops.empty()) return;
  std::string msg = "algebraic loop through";
  for (const auto &id : loops[0]) msg += " " + id;
  throw Error(ErrorCode::CycleError, msg);
}

} // namespace

std::vector<BlockInstance> toposort(const Diagram &flat) {
  require_loop_free(flat);
  std::size_t n = flat.blocks.size();
  Graph g = wire_graph(flat, false);
  std::vector<std::size_t> resolved(n, 0);
  std::vector<bool> placed(n, false);
  std::vector<BlockInstance> out;
  for (std::size_t i = 0; i < n; ++i) resolved[i] = flat.blocks[i].in.size() - g.pred[i].size();
  while (out.size() < n) {
    std::optional<std::size_t> best;
    bool best_ready = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      bool ready = resolved[i] == flat.blocks[i].in.size();
      if (!best) {
        best = i;
        best_ready = ready;
        continue;
      }
      const auto &bi = flat.blocks[i];
      const auto &bb = flat.blocks[*best];
      if (ready != best_ready) {
        if (ready) {
          best = i;
          best_ready = true;
        }
        continue;
      }
      bool better = ready ? bi.id < bb.id
                          : (resolved[i] > resolved[*best] || (resolved[i] == resolved[*best] && bi.id < bb.id));
      if (better) best = i;
    }
    placed[*best] = true;
    out.push_back(flat.blocks[*best]);
    for (auto s : g.succ[*best]) ++resolved[s];
  }
  return out;
}

std::vector<BlockInstance> schedule(const Diagram &flat) {
  std::size_t n = flat.blocks.size();
  Graph g = wire_graph(flat, true);
  std::vector<std::size_t> missing(n);
  for (std::size_t i = 0; i < n; ++i) missing[i] = g.pred[i].size();
  auto cmp = [&](std::size_t a, std::size_t b) { return flat.blocks[a].id > flat.blocks[b].id; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
  for (std::size_t i = 0; i < n; ++i)
    if (missing[i] == 0) ready.push(i);
  std::vector<BlockInstance> out;
  while (!ready.empty()) {
    auto i = ready.top();
    ready.pop();
    out.push_back(flat.blocks[i]);
    for (auto s : g.succ[i])
      if (--missing[s] == 0) ready.push(s);
  }
  if (out.size() != n) require_loop_free(flat);
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void validate_level(const Diagram &d, const std::string &path, std::vector<Diagnostic> &out) {
  auto diag = [&](Severity s, DiagCode c, const std::string &loc, const std::string &msg) {
    out.push_back(Diagnostic{s, c, loc, msg, {}});
  };
  std::map<std::string, std::vector<std::string>> producers;
  std::map<std::string, std::size_t> consumers;
  for (const auto &v : d.inputs) producers[v.name].push_back(path + " input");
  for (const auto &v : d.outputs) ++consumers[v.name];
  for (const auto &b : d.blocks) {
    std::string loc = path + "/" + b.id;
    for (const auto &v : b.out) producers[v.name].push_back(loc);
    for (const auto &v : b.in) ++consumers[v.name];
    if (b.is_subsystem()) {
      const Diagram &sub = *b.subsystem;
      if (sub.inputs.size() != b.in.size() || sub.outputs.size() != b.out.size())
        diag(Severity::Error, DiagCode::MalformedBlock, loc,
             "subsystem has " + std::to_string(sub.inputs.size()) + " inputs and " +
                 std::to_string(sub.outputs.size()) + " outputs but is wired with " + std::to_string(b.in.size()) +
                 " and " + std::to_string(b.out.size()));
      validate_level(sub, loc, out);
      continue;
    }
    if (!b.type) {
      bool unsupported = !find_block_kind(b.kind) || b.type_error.rfind("UnsupportedBlock", 0) == 0;
      diag(Severity::Error, unsupported ? DiagCode::UnsupportedBlock : DiagCode::MalformedBlock, loc, b.type_error);
      continue;
    }
    if (b.in.size() != b.type->inputs || b.out.size() != b.type->outputs)
      diag(Severity::Error, DiagCode::MalformedBlock, loc,
           b.kind + " takes " + std::to_string(b.type->inputs) + " inputs and " + std::to_string(b.type->outputs) +
               " outputs, got " + std::to_string(b.in.size()) + " and " + std::to_string(b.out.size()));
    std::unordered_set<std::string> seen;
    for (const auto &v : b.in)
      if (!seen.insert(v.name).second)
        diag(Severity::Error, DiagCode::MalformedBlock, loc, "port '" + v.name + "' used twice");
  }
  for (const auto &[w, ps] : producers)
    if (ps.size() > 1) {
      std::string who;
      for (const auto &p : ps) who += (who.empty() ? "" : ", ") + p;
      diag(Severity::Error, DiagCode::DuplicateWire, ps[1], "wire '" + w + "' is produced by " + who);
    }
  for (const auto &b : d.blocks)
    for (const auto &v : b.in)
      if (!producers.count(v.name))
        diag(Severity::Error, DiagCode::DanglingPort, path + "/" + b.id, "input '" + v.name + "' is not driven");
  for (const auto &v : d.outputs)
    if (!producers.count(v.name))
      diag(Severity::Error, DiagCode::DanglingPort, path, "output '" + v.name + "' is not driven");
  for (const auto &[w, ps] : producers)
    if (!consumers.count(w))
      diag(Severity::Warning, DiagCode::DanglingPort, ps[0], "wire '" + w + "' is not consumed");
}

} // namespace

std::vector<Diagnostic> validate(const Diagram &d) {
  std::vector<Diagnostic> out;
  validate_level(d, d.name, out);
  if (has_errors(out)) return out;
  Diagram flat = flatten(d);
  for (const auto &loop : algebraic_loops(flat)) {
    std::string msg = "algebraic loop through";
    for (const auto &id : loop) msg += " " + id;
    std::string loc = d.name + "/" + loop[0];
    std::replace(loc.begin(), loc.end(), '.', '/');
    out.push_back(Diagnostic{Severity::Error, DiagCode::AlgebraicLoop, loc, msg, loop});
  }
  return out;
}

} // namespace hbdpt
