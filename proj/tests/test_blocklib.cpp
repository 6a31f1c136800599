#include <fstream>

#include <gtest/gtest.h>

#include "gen_expr.hpp"
#include "hbdpt/blocklib.hpp"

using namespace hbdpt;

namespace {

VarList reals(std::initializer_list<const char *> names) {
  VarList out;
  for (auto n : names) out.push_back(Var{n, Sort::Real});
  return out;
}

BlockType type(const std::string &kind, std::map<std::string, std::string> params = {},
               std::optional<std::size_t> outs = std::nullopt) {
  return make_block_type(kind, params, outs);
}

// One representative instance of every kind.
std::vector<BlockType> samples() {
  return {type("Constant", {{"value", "1"}}),
          type("Add"),
          type("Sub"),
          type("Gain", {{"k", "3"}}),
          type("Product"),
          type("Div"),
          type("UnitDelay"),
          type("Integrator", {{"dt", "1/2"}}),
          type("Split", {}, 3),
          type("Scope"),
          type("Id"),
          type("Min"),
          type("Max"),
          type("Switch", {{"threshold", "0"}}),
          type("RelationalOp", {{"op", "lt"}})};
}

// Every tuple of length n over the carrier.
std::vector<std::vector<Rational>> tuples(std::size_t n, const std::vector<Rational> &carrier) {
  std::vector<std::vector<Rational>> out{{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::vector<Rational>> next;
    for (const auto &t : out)
      for (const auto &c : carrier) {
        auto u = t;
        u.push_back(c);
        next.push_back(u);
      }
    out = std::move(next);
  }
  return out;
}

} // namespace

TEST(BlockLib, Catalogue) {
  EXPECT_EQ(block_kinds().size(), 15u);
  for (const auto &k : block_kinds()) EXPECT_TRUE(find_block_kind(k.name)) << k.name;
  EXPECT_FALSE(find_block_kind("LookupTable"));
}

TEST(BlockLib, InstantiateExamples) {
  auto c = instantiate(type("Constant", {{"value", "1"}}), {}, reals({"x"}), {});
  EXPECT_TRUE(c.inputs.empty());
  EXPECT_EQ(pretty(as_term(c)), "[() -> 1]");

  auto ud = instantiate(type("UnitDelay"), reals({"c"}), reals({"a"}), reals({"s"}));
  EXPECT_TRUE(ud.pre.is_true());
  EXPECT_EQ(to_string(ud.rel), "(a = s) & (s' = c)");
  EXPECT_EQ(var_list_to_string(ud.inputs), "c, s");
  EXPECT_EQ(var_list_to_string(ud.outputs), "a, s'");

  auto in = instantiate(type("Integrator", {{"dt", "1/10"}}), reals({"x"}), reals({"y"}), reals({"s"}));
  EXPECT_EQ(pretty(as_term(in)), "[x, s -> s, s + (x * 1/10)]");

  auto div = instantiate(type("Div"), reals({"x", "y"}), reals({"z"}), {});
  EXPECT_EQ(to_string(div.pre), "y != 0");
  ASSERT_TRUE(div.bodies);
  EXPECT_EQ(to_string((*div.bodies)[0]), "x / y");

  EXPECT_THROW(instantiate(type("Add"), reals({"x"}), reals({"z"}), {}), Error);
  EXPECT_THROW(instantiate(type("UnitDelay"), reals({"c"}), reals({"a"}), {}), Error);
}

TEST(BlockLib, ParamErrors) {
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error &e) {
      return e.code();
    }
    return ErrorCode::ValidationFailed;
  };
  EXPECT_EQ(code([] { type("Gain"); }), ErrorCode::MissingParam);
  EXPECT_EQ(code([] { type("Lookup"); }), ErrorCode::UnsupportedBlock);
  EXPECT_EQ(code([] { type("Gain", {{"k", "abc"}}); }), ErrorCode::SchemaError);
  EXPECT_EQ(code([] { type("RelationalOp", {{"op", "~"}}); }), ErrorCode::SchemaError);
  EXPECT_EQ(code([] { type("Add", {{"bogus", "1"}}); }), ErrorCode::UnsupportedBlock);
}

TEST(BlockLib, AtomNames) {
  EXPECT_EQ(atom_name(type("Constant", {{"value", "0.5"}})), "Const(1/2)");
  EXPECT_EQ(atom_name(type("Gain", {{"k", "-2"}})), "Gain(-2)");
  EXPECT_EQ(atom_name(type("Split", {}, 2)), "Split");
  EXPECT_EQ(atom_name(type("Split", {}, 3)), "Split(3)");
  EXPECT_EQ(atom_name(type("Integrator")), "Integrator(1/100)");
  for (const auto &b : samples()) {
    auto t = resolve_block_ref(atom_name(b));
    ASSERT_TRUE(t) << atom_name(b);
    EXPECT_EQ(t->signature(), as_term(block_atom(b)).signature()) << atom_name(b);
  }
}

TEST(BlockLib, Parts) {
  auto ud = block_parts(type("UnitDelay"));
  ASSERT_EQ(ud.size(), 2u);
  EXPECT_EQ(ud[0].name, "Id_ud2");
  EXPECT_EQ(ud[0].deps, std::vector<std::size_t>{1});
  EXPECT_EQ(ud[1].name, "Id_ud1");
  EXPECT_EQ(ud[1].deps, std::vector<std::size_t>{0});
  auto sp = block_parts(type("Split", {}, 2));
  EXPECT_EQ(sp[1].name, "Id_splt2");
  EXPECT_EQ(block_parts(type("Add"))[0].deps, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(resolve_block_ref("Id_ud2")->signature(), CptTerm::id({Sort::Real}).signature());
}

TEST(BlockLib, EveryAtomIsFunctional) {
  for (const auto &b : samples()) EXPECT_TRUE(block_atom(b).is_functional()) << b.kind;
}

TEST(BlockLib, ScopeIsId) {
  auto a = block_atom(type("Scope"));
  ASSERT_TRUE(a.bodies);
  EXPECT_EQ((*a.bodies)[0], ex::var(a.inputs[0]));
}

// Outputs agree on inputs that differ only outside the declared feedthrough
// set; checked exhaustively over the carrier with the state held fixed.
TEST(BlockLibProperty, FeedthroughIsSound) {
  auto carrier = DomainConfig::range(-2, 2).reals;
  for (const auto &b : samples()) {
    AtomicPT a = block_atom(b);
    auto ft = feedthrough(b);
    ASSERT_EQ(ft.size(), b.outputs) << b.kind;
    auto ins = tuples(b.inputs, carrier);
    for (std::size_t k = 0; k < b.outputs; ++k) {
      for (const auto &s0 : tuples(b.states, {Rational(1)}))
        for (const auto &u : ins)
          for (const auto &v : ins) {
            bool same = true;
            for (auto i : ft[k]) same = same && u[i] == v[i];
            if (!same) continue;
            Env eu, ev;
            for (std::size_t i = 0; i < b.inputs; ++i) {
              eu[a.inputs[i].name] = u[i];
              ev[a.inputs[i].name] = v[i];
            }
            for (std::size_t i = 0; i < b.states; ++i) {
              eu[a.inputs[b.inputs + i].name] = s0[i];
              ev[a.inputs[b.inputs + i].name] = s0[i];
            }
            const Expr &body = (*a.bodies)[k];
            ASSERT_EQ(eval(body, eu, {}, DivisionMode::Total), eval(body, ev, {}, DivisionMode::Total)) << b.kind;
          }
    }
  }
}

TEST(BlockLib, StatefulBlocksHaveNoFeedthrough) {
  EXPECT_TRUE(feedthrough(type("UnitDelay"))[0].empty());
  EXPECT_TRUE(feedthrough(type("Integrator"))[0].empty());
  EXPECT_EQ(feedthrough(type("Add"))[0], (std::vector<std::size_t>{0, 1}));
}

TEST(BlockLib, ManifestMatchesShippedCopy) {
  std::ifstream in(std::string(HBDPT_DOCS_DIR) + "/blocks.json");
  ASSERT_TRUE(in) << "docs/blocks.json missing";
  auto shipped = nlohmann::json::parse(in);
  EXPECT_EQ(shipped, block_manifest());
}
