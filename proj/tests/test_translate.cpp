#include <gtest/gtest.h>

#include "gen_cpt.hpp"
#include "hbdpt/fixtures.hpp"
#include "hbdpt/translate.hpp"

using namespace hbdpt;

namespace {

Diagram model(const std::string &name) { return load_diagram(corpus_path(name)); }

// Printed with the shortest unique port names, as the paper writes them.
std::string shown(const CptTerm &t) { return pretty(rename_ports(t, short_names(port_names(t)))); }

VarList reals(std::initializer_list<const char *> names) {
  VarList out;
  for (auto n : names) out.push_back(Var{n, Sort::Real});
  return out;
}

Component comp(const char *name, VarList in, VarList out) {
  Signature sig{sorts_of(in), sorts_of(out)};
  return {std::move(in), std::move(out), CptTerm::named(name, sig)};
}

TranslationUnit run(const std::string &m, Strategy s, bool flat = false, bool io = false, bool id_elim = true) {
  TranslationOptions o;
  o.strategy = s;
  o.flat = flat;
  o.io = io;
  o.id_elim = id_elim;
  return translate_model(model(m), o);
}

const Diagram &delaysum(const Diagram &counter) { return *counter.find("DelaySum")->subsystem; }

} // namespace

TEST(Compose, FigureOneOrders) {
  Component a = comp("P_A", reals({"a", "b"}), reals({"c", "d"}));
  Component b = comp("P_B", reals({"c"}), reals({"a"}));

  Component ab = compose(a, b);
  EXPECT_EQ(pretty(ab.cpt), "feedback(P_A ; (P_B || Id))");
  EXPECT_EQ(var_list_to_string(ab.in), "b");
  EXPECT_EQ(var_list_to_string(ab.out), "d");

  Component ba = compose(b, a);
  EXPECT_EQ(pretty(ba.cpt), "feedback((P_B || Id) ; P_A)");

  Component par = parallel_comp(a, b);
  EXPECT_EQ(var_list_to_string(par.in), "a, b, c");
  EXPECT_EQ(var_list_to_string(par.out), "c, d, a");
  Component fb = feedback_comp(par);
  EXPECT_EQ(pretty(fb.cpt), "feedback(feedback(([a, c, b -> a, b, c] ; (P_A || P_B)) ; [c, d, a -> a, c, d]))");
  EXPECT_EQ(var_list_to_string(fb.in), "b");
  EXPECT_EQ(var_list_to_string(fb.out), "d");
}

TEST(Compose, SerialPadding) {
  Component a = comp("P_A", reals({"a", "b"}), reals({"c", "d"}));
  Component b = comp("P_B", reals({"c"}), reals({"a"}));
  Component s = serial_comp(a, b);
  EXPECT_EQ(pretty(s.cpt), "(P_A ; (P_B || Id))");
  EXPECT_EQ(var_list_to_string(s.in), "a, b");
  EXPECT_EQ(var_list_to_string(s.out), "a, d");

  Component add = comp("Add", reals({"f", "e"}), reals({"c"}));
  Component ud = comp("UnitDelay", reals({"c", "s"}), reals({"a", "s'"}));
  EXPECT_EQ(pretty(serial_comp(add, ud).cpt), "((Add || Id) ; UnitDelay)");

  Component id1 = comp("Scope", reals({"x"}), reals({"y"}));
  Component id2 = comp("Scope", reals({"y"}), reals({"z"}));
  EXPECT_EQ(pretty(serial_comp(id1, id2).cpt), "(Scope ; Scope)");
}

TEST(Compose, ParallelWhenUnconnected) {
  Component c1 = comp("Const(1)", {}, reals({"x"}));
  Component c0 = comp("Const(0)", {}, reals({"y"}));
  EXPECT_EQ(pretty(compose(c1, c0).cpt), "(Const(1) || Const(0))");
  EXPECT_THROW(feedback_comp(c1), Error);
}

TEST(Compose, FeedbackOnIdentity) {
  Component x{reals({"x"}), reals({"x"}), CptTerm::id({Sort::Real})};
  Component f = feedback_comp(x);
  EXPECT_EQ(pretty(f.cpt), "feedback(Id)");
  EXPECT_TRUE(f.in.empty());
  EXPECT_TRUE(f.out.empty());
}

// Whenever a serial orientation without back-wires exists, compose does not
// introduce a feedback.
TEST(ComposeProperty, NoNeedlessFeedback) {
  std::mt19937_64 rng(3);
  const char *pool[] = {"a", "b", "c", "d", "e", "f"};
  for (int i = 0; i < 500; ++i) {
    // Each wire: producer and consumer among A, B or the outside.
    VarList ain, aout, bin, bout;
    for (const char *w : pool) {
      Var v{w, Sort::Real};
      auto prod = rng() % 3, cons = rng() % 3;
      if (prod == cons) continue;
      if (prod == 0) aout.push_back(v);
      if (prod == 1) bout.push_back(v);
      if (cons == 0) ain.push_back(v);
      if (cons == 1) bin.push_back(v);
    }
    Component a = comp("A", ain, aout), b = comp("B", bin, bout);
    auto meets = [](const VarList &x, const VarList &y) {
      for (const auto &v : x)
        for (const auto &w : y)
          if (v.name == w.name) return true;
      return false;
    };
    bool back_ab = meets(b.out, a.in), back_ba = meets(a.out, b.in);
    Component c = compose(a, b);
    if (!back_ab || !back_ba) EXPECT_EQ(count_feedbacks(c.cpt), 0u) << pretty(c.cpt);
  }
}

TEST(TranslateIT, DelaySum) {
  auto u = run("counter", Strategy::IT);
  ASSERT_EQ(u.defs.size(), 2u);
  EXPECT_EQ(u.defs[0].name, "DelaySum");
  EXPECT_EQ(pretty(u.defs[0].term), "feedback(((Add || Id) ; UnitDelay) ; (Split || Id))");
  EXPECT_EQ(u.top, "Counter");
  EXPECT_EQ(pretty(u.top_def().term), "(((Const(1) || Id) ; DelaySum) ; (Scope || Id))");
}

TEST(TranslateIT, ConstDiv) {
  auto u = run("constdiv", Strategy::IT);
  ASSERT_EQ(u.defs.size(), 1u);
  EXPECT_EQ(pretty(u.top_def().term), "(((((Const(1) || Const(0)) ; Div) ; Split) ; (Scope || Id)) ; (Id || Scope))");
  Diagram d = model("constdiv");
  EXPECT_EQ(pretty(translate_it(d)), pretty(u.top_def().term));
}

TEST(TranslateIT, IoNamesEveryComposition) {
  auto u = run("counter", Strategy::IT, false, true);
  EXPECT_EQ(u.defs.size(), 6u);
  EXPECT_EQ(pretty(u.defs[0].term), "((Add || Id) ; UnitDelay)");
  EXPECT_EQ(u.defs[0].name, "ICC1");
  EXPECT_EQ(pretty(u.defs[1].term), "feedback(ICC1 ; (Split || Id))");
}

TEST(TranslateFP, DelaySum) {
  Diagram c = model("counter");
  CptTerm t = translate_fp(delaysum(c));
  EXPECT_EQ(count_feedbacks(t), 3u);
  EXPECT_EQ(shown(t), "feedback(feedback(feedback(([f, c, a, e, s -> f, e, c, s, a] ; ((Add || UnitDelay) || Split)) "
                      "; [c, a, s', f, g -> f, c, a, s', g])))");
}

TEST(TranslateFP, ConstDivAndSingleBlock) {
  EXPECT_EQ(count_feedbacks(translate_fp(model("constdiv"))), 5u);
  Diagram one = parse_diagram(R"({"name": "O", "inputs": ["u"], "outputs": ["y"], "blocks": [
    {"id": "s", "kind": "Gain", "params": {"k": 2}, "in": ["u"], "out": ["y"]}]})");
  EXPECT_EQ(pretty(translate_fp(one)), "Gain(2)");
}

TEST(TranslateNFBT, DelaySumVerbatim) {
  Diagram c = model("counter");
  CptTerm t = translate_nfbt(delaysum(c), std::nullopt, false);
  EXPECT_EQ(shown(t), "([s, e -> s, s, e] ; ((Id_ud2 ; Id_splt2) || ((((Id_ud2 ; Id_splt1) || Id) ; Add) ; Id_ud1)))");
  EXPECT_EQ(shown(translate_nfbt(delaysum(c))), "([s, e -> s, s, e] ; (Id || Add))");
}

TEST(TranslateNFBT, PassThrough) {
  Diagram one = parse_diagram(R"({"name": "O", "inputs": ["u"], "outputs": ["y"], "blocks": [
    {"id": "s", "kind": "Scope", "in": ["u"], "out": ["y"]}]})");
  EXPECT_EQ(pretty(translate_nfbt(one)), "Id");
}

TEST(TranslateNFBT, RejectsAlgebraicLoop) {
  Diagram d = model("delaysum-loop");
  EXPECT_THROW(translate_nfbt(d), Error);
  TranslationOptions o;
  o.strategy = Strategy::NFBT;
  try {
    translate_model(d, o);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationFailed);
  }
}

TEST(TranslateModel, DefinitionCounts) {
  EXPECT_EQ(run("counter", Strategy::FP).defs.size(), 2u);
  EXPECT_EQ(run("counter", Strategy::FP, true).defs.size(), 1u);
  EXPECT_EQ(run("counter", Strategy::IT, true).defs.size(), 1u);
  EXPECT_EQ(run("counter", Strategy::IT, true, true).defs.size(), 5u);
  // NFBT ignores flat and io.
  auto n1 = to_text(run("counter", Strategy::NFBT));
  EXPECT_EQ(to_text(run("counter", Strategy::NFBT, true, true)), n1);
}

TEST(TranslateModel, TopLevelInterface) {
  for (auto s : {Strategy::FP, Strategy::IT, Strategy::NFBT})
    for (bool flat : {false, true}) {
      TranslationOptions o;
      o.strategy = s;
      o.flat = flat;
      auto u = translate_model(model("counter"), o);
      const Definition &top = u.top_def();
      EXPECT_EQ(var_list_to_string(top.inputs), "DelaySum.UnitDelay.s");
      EXPECT_EQ(var_list_to_string(top.outputs), "z, DelaySum.UnitDelay.s'");
      EXPECT_EQ(top.term.signature(), (Signature{{Sort::Real}, {Sort::Real, Sort::Real}}));
      // Every reference resolves to an earlier definition or a block.
      auto resolve = u.resolver();
      for (const auto &d : u.defs)
        for (const auto &r : named_refs(d.term)) EXPECT_TRUE(resolve(r)) << r;
    }
}

TEST(TranslateModel, OutputFormats) {
  auto u = run("counter", Strategy::IT);
  EXPECT_EQ(to_text(u), "def DelaySum = feedback(((Add || Id) ; UnitDelay) ; (Split || Id))\n"
                        "def Counter = (((Const(1) || Id) ; DelaySum) ; (Scope || Id))\n");
  auto j = to_json(u);
  EXPECT_EQ(j["top"], "Counter");
  EXPECT_EQ(j["definitions"].size(), 2u);
  EXPECT_EQ(parse_strategy("nfbt"), Strategy::NFBT);
  EXPECT_FALSE(parse_strategy("xx"));
}

TEST(TranslateModel, SharedSubsystemNames) {
  // The subsystem name collides with a block atom and is renamed.
  Diagram d = parse_diagram(R"({"name": "T", "inputs": ["u"], "outputs": ["y"], "blocks": [
    {"id": "s", "in": ["u"], "out": ["y"], "subsystem": {"name": "Add", "inputs": ["a"], "outputs": ["b"],
      "blocks": [{"id": "g", "kind": "Gain", "params": {"k": 2}, "in": ["a"], "out": ["b"]}]}}]})");
  auto u = translate_model(d, {});
  EXPECT_EQ(u.defs[0].name, "Add_2");
}

TEST(TranslateProperty, NfbtHasNoFeedback) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Diagram d = gen_random_diagram(seed);
    TranslationOptions o;
    o.strategy = Strategy::NFBT;
    for (const auto &def : translate_model(d, o).defs) EXPECT_EQ(count_feedbacks(def.term), 0u) << seed;
    o.id_elim = false;
    for (const auto &def : translate_model(d, o).defs) EXPECT_EQ(count_feedbacks(def.term), 0u) << seed;
  }
}

TEST(TranslateProperty, AllStrategiesTypeCheck) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Diagram d = gen_random_diagram(seed);
    Interface iface = interface_of(d);
    Signature want{sorts_of(iface.in), sorts_of(iface.out)};
    for (auto s : {Strategy::FP, Strategy::IT, Strategy::NFBT}) {
      TranslationOptions o;
      o.strategy = s;
      auto u = translate_model(d, o);
      EXPECT_EQ(u.top_def().term.signature(), want) << seed << " " << strategy_name(s);
      std::string text = to_text(u);
      // The printed unit parses back, definition by definition.
      TranslationUnit back;
      for (const auto &def : u.defs) {
        back.defs.push_back({def.name, parse_cpt(pretty(def.term), back.resolver()), def.inputs, def.outputs});
      }
      back.top = u.top;
      EXPECT_EQ(to_text(back), text);
    }
  }
}

TEST(ShortNames, SuffixRules) {
  auto m = short_names({"DelaySum.UnitDelay.s", "DelaySum.UnitDelay.s'", "x", "A.x", "B.q.t", "C.t"});
  EXPECT_EQ(m["DelaySum.UnitDelay.s"], "s");
  EXPECT_EQ(m["DelaySum.UnitDelay.s'"], "s'");
  EXPECT_EQ(m["x"], "x");
  EXPECT_EQ(m["A.x"], "A.x");
  EXPECT_EQ(m["B.q.t"], "q.t");
  EXPECT_EQ(m["C.t"], "C.t");
}
