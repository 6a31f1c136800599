#include "hbdpt/fixtures.hpp"

#include <random>
#include <set>

namespace hbdpt {

namespace {

struct Kind {
  const char *name;
  std::size_t inputs;
};

const Kind kKinds[] = {{"Add", 2},  {"Sub", 2},       {"Gain", 1},   {"Product", 2},     {"Min", 2},
                       {"Max", 2},  {"Scope", 1},     {"Switch", 3}, {"RelationalOp", 2}, {"UnitDelay", 1},
                       {"Integrator", 1}, {"Div", 2}};

class Gen {
public:
  Gen(std::uint64_t seed, const GenParams &p) : rng_(seed), p_(p) {}

  nlohmann::json run() {
    std::size_t total = p_.exact ? p_.max_blocks : 1 + pick(std::max<std::size_t>(p_.max_blocks, 1));
    std::size_t aux = total > 1 ? pick(total / 2 + 1) : 0;
    std::size_t main = total - aux;
    aux_left_ = aux;
    main_ = main;
    for (std::size_t i = 0; i < main; ++i) add_main(i);
    // Unconsumed outputs leave the diagram; at least one always does.
    nlohmann::json outputs = nlohmann::json::array();
    for (std::size_t i = 0; i < main; ++i)
      if (!consumed_.count(wire(i))) outputs.push_back(wire(i));
    if (outputs.empty()) outputs.push_back(wire(main - 1));
    nlohmann::json inputs = nlohmann::json::array();
    for (std::size_t k = 1; k <= externals_; ++k) inputs.push_back("u" + std::to_string(k));
    return {{"name", "Gen"}, {"inputs", inputs}, {"outputs", outputs}, {"blocks", blocks_}};
  }

private:
  static std::string wire(std::size_t i) { return "w" + std::to_string(i + 1); }

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() % 1000) < p * 1000; }

  const Kind &choose_kind() {
    for (;;) {
      const Kind &k = kKinds[pick(std::size(kKinds))];
      if (k.inputs > p_.max_inputs) continue;
      if (!p_.allow_div && std::string(k.name) == "Div") continue;
      return k;
    }
  }

  std::string external() {
    if (externals_ == 0 || (externals_ < 2 && chance(0.3))) ++externals_;
    return "u" + std::to_string(1 + pick(externals_));
  }

  std::string source(std::size_t i, std::size_t slot) {
    // The first input ties the block to an earlier one, keeping one island.
    if (i > 0 && slot == 0) {
      std::size_t j = pick(i);
      consumed_.insert(wire(j));
      return wire(j);
    }
    if (aux_left_ > 0 && chance(p_.const_prob)) {
      --aux_left_;
      std::string id = "k" + std::to_string(++consts_);
      blocks_.push_back({{"id", id},
                         {"kind", "Constant"},
                         {"params", {{"value", static_cast<long>(pick(5)) - 2}}},
                         {"in", nlohmann::json::array()},
                         {"out", {id + "o"}}});
      return id + "o";
    }
    if (aux_left_ > 0 && chance(p_.delay_prob)) {
      // Back-edge (or forward) through a delay: never instantaneous.
      --aux_left_;
      std::size_t j = i + pick(main_ - i);
      std::string id = "d" + std::to_string(++delays_);
      consumed_.insert(wire(j));
      blocks_.push_back({{"id", id},
                         {"kind", "UnitDelay"},
                         {"params", {{"init", static_cast<long>(pick(3)) - 1}}},
                         {"in", {wire(j)}},
                         {"out", {id + "o"}}});
      return id + "o";
    }
    if (i > 0 && chance(0.5)) {
      std::size_t j = pick(i);
      consumed_.insert(wire(j));
      return wire(j);
    }
    return external();
  }

  void add_main(std::size_t i) {
    const Kind &k = choose_kind();
    nlohmann::json params = nlohmann::json::object();
    std::string kind = k.name;
    if (kind == "Gain") params["k"] = std::to_string(static_cast<long>(pick(5)) - 2) + "/" + std::to_string(1 + pick(2));
    if (kind == "Switch") params["threshold"] = static_cast<long>(pick(3)) - 1;
    if (kind == "RelationalOp") {
      static const char *ops[] = {"lt", "le", "gt", "ge", "eq", "ne"};
      params["op"] = ops[pick(std::size(ops))];
    }
    if (kind == "UnitDelay") params["init"] = static_cast<long>(pick(3)) - 1;
    if (kind == "Integrator") params["dt"] = "1/2";
    nlohmann::json in = nlohmann::json::array();
    std::set<std::string> seen;
    for (std::size_t s = 0; s < k.inputs; ++s) {
      std::string w = source(i, s);
      // A block may not read the same wire twice.
      if (seen.count(w)) {
        ++externals_;
        w = "u" + std::to_string(externals_);
      }
      seen.insert(w);
      in.push_back(w);
    }
    blocks_.push_back({{"id", "b" + std::to_string(i + 1)}, {"kind", kind}, {"params", params}, {"in", in},
                       {"out", {wire(i)}}});
  }

  std::mt19937_64 rng_;
  GenParams p_;
  nlohmann::json blocks_ = nlohmann::json::array();
  std::set<std::string> consumed_;
  std::size_t aux_left_ = 0, main_ = 0, externals_ = 0, consts_ = 0, delays_ = 0;
};

} // namespace

std::string gen_random_diagram_text(std::uint64_t seed, const GenParams &p) { return Gen(seed, p).run().dump(2); }

Diagram gen_random_diagram(std::uint64_t seed, const GenParams &p) {
  return parse_diagram(gen_random_diagram_text(seed, p));
}

std::size_t wire_count(const Diagram &d) {
  std::set<std::string> names;
  for (const auto &v : d.inputs) names.insert(v.name);
  for (const auto &v : d.outputs) names.insert(v.name);
  for (const auto &b : d.blocks) {
    for (const auto &v : b.in) names.insert(v.name);
    for (const auto &v : b.out) names.insert(v.name);
  }
  return names.size();
}

Diagram gen_sized_diagram(std::uint64_t seed, std::size_t blocks, std::size_t wires) {
  GenParams p;
  p.allow_div = false;
  p.exact = true;
  for (std::uint64_t s = seed; s < seed + 200000; ++s) {
    // Fan-out Splits add blocks, so aim a little below the target.
    for (std::size_t want = blocks * 2 / 3; want <= blocks; ++want) {
      p.max_blocks = want;
      Diagram d = gen_random_diagram(s, p);
      if (d.blocks.size() == blocks && wire_count(d) == wires && islands(d).size() == 1 && !has_errors(validate(d)))
        return d;
      if (d.blocks.size() > blocks) break;
    }
  }
  throw Error(ErrorCode::SchemaError, "no generated diagram with " + std::to_string(blocks) + " blocks and " +
                                          std::to_string(wires) + " wires");
}

std::vector<std::string> corpus_models() { return {"counter", "fig1", "constdiv", "integrator", "delaysum-loop"}; }

std::string corpus_path(const std::string &model) { return std::string(HBDPT_MODELS_DIR) + "/" + model + ".bd"; }

} // namespace hbdpt
