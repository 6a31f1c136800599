#include <gtest/gtest.h>

#include "rule_cases.hpp"
#include "hbdpt/blocklib.hpp"
#include "hbdpt/fixtures.hpp"
#include "hbdpt/semantics.hpp"
#include "hbdpt/simplify.hpp"

using namespace hbdpt;
using namespace hbdpt::testing;

namespace {

VarList reals(std::initializer_list<const char *> names) {
  VarList out;
  for (auto n : names) out.push_back(Var{n, Sort::Real});
  return out;
}

std::map<std::string, Sort> scope_of(const VarList &a, const VarList &b = {}) {
  std::map<std::string, Sort> s;
  for (const auto &v : a) s[v.name] = v.sort;
  for (const auto &v : b) s[v.name] = v.sort;
  return s;
}

AtomicPT func(const VarList &in, const VarList &out, std::initializer_list<const char *> bodies) {
  std::vector<Expr> bs;
  for (auto b : bodies) bs.push_back(parse_expr(b, scope_of(in)));
  return AtomicPT::functional(in, out, bs);
}

AtomicPT rel(const VarList &in, const VarList &out, const char *r) {
  return AtomicPT::relational(in, out, parse_expr(r, scope_of(in, out)));
}

TranslationUnit translate_file(const std::string &model, Strategy s, bool flat = false, bool io = false) {
  TranslationOptions o;
  o.strategy = s;
  o.flat = flat;
  o.io = io;
  return translate_model(load_diagram(corpus_path(model)), o);
}

bool same_sem(const CptTerm &composite, const AtomicPT &expanded) {
  return equiv(rel_sem(composite), rel_sem(expanded));
}

} // namespace

TEST(Expand, DelaySumAndCounter) {
  auto u = translate_file("counter", Strategy::IT);
  auto r = simplify_unit(u);
  ASSERT_TRUE(r.top_def());
  EXPECT_TRUE(alpha_equiv(r.find("DelaySum")->atom, func(reals({"x", "s"}), reals({"y", "t"}), {"s", "s + x"})));
  EXPECT_TRUE(alpha_equiv(r.top_def()->atom, func(reals({"s"}), reals({"y", "t"}), {"s", "s + 1"})));
  EXPECT_EQ(pretty(display_form(r.top_def()->atom)), "[s -> s, s + 1]");
  EXPECT_EQ(r.top_def()->trace.quantifiers_introduced(), 0);
}

TEST(Expand, ConstDivPreconditionIsFalse) {
  for (auto s : {Strategy::FP, Strategy::IT, Strategy::NFBT}) {
    auto r = simplify_unit(translate_file("constdiv", s));
    ASSERT_TRUE(r.top_def());
    EXPECT_TRUE(r.top_def()->atom.pre.is_false()) << strategy_name(s);
    EXPECT_EQ(r.top_def()->compat.verdict, Verdict::Incompatible);
    EXPECT_FALSE(r.top_def()->compat.domain_relative);
  }
}

TEST(Expand, TextReport) {
  auto r = simplify_unit(translate_file("counter", Strategy::IT));
  std::string text = to_text(r);
  EXPECT_NE(text.find("Counter = [s -> s, s + 1]\n"), std::string::npos) << text;
  EXPECT_NE(text.find("# Counter: Compatible (s = -2); R2 x2, R4 x2; +0 quantifiers"), std::string::npos) << text;
  auto j = to_json(r);
  EXPECT_EQ(j["top"], "Counter");
  EXPECT_EQ(j["definitions"][1]["text"], "[s -> s, s + 1]");
}

TEST(Expand, IoDefinitionsAreReused) {
  auto r = simplify_unit(translate_file("counter", Strategy::IT, false, true));
  ASSERT_EQ(r.defs.size(), 6u);
  // DelaySum = ICC2 expands nothing: it reuses the simplified ICC2.
  EXPECT_TRUE(r.find("DelaySum")->trace.steps.empty());
  EXPECT_TRUE(alpha_equiv(r.find("DelaySum")->atom, r.find("ICC2")->atom));
}

TEST(Expand, TraceSizesArePrintedLengths) {
  auto e = expand(parse_cpt("([x -> x + 1] ; [y -> y * 2])", {}));
  ASSERT_EQ(e.trace.steps.size(), 1u);
  const auto &s = e.trace.steps[0];
  EXPECT_EQ(s.rule, "R2");
  EXPECT_EQ(s.after, pretty(e.result).size());
  // Operands are measured after their ports are freshened.
  EXPECT_GE(s.before, std::string("[x -> x + 1]").size() + std::string("[y -> y * 2]").size());
  EXPECT_EQ(e.trace.summary(), "R2 x1; +0 quantifiers");
}

TEST(Expand, PrintedLengthMatchesPretty) {
  AtomGen g(5);
  for (int i = 0; i < 200; ++i) {
    AtomicPT a = g.any("a", g.pick(3), 1 + g.pick(2));
    EXPECT_EQ(printed_length(a), pretty(a).size()) << pretty(a);
  }
}

TEST(Expand, BudgetExhaustion) {
  ExpandOptions o;
  o.node_budget = 5;
  auto u = translate_file("counter", Strategy::IT);
  auto r = simplify_unit(u, o);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_EQ(r.top_def(), nullptr);
  EXPECT_NE(to_text(r).find("budget exhausted"), std::string::npos);
}

TEST(Expand, UnresolvedReference) {
  try {
    expand(CptTerm::named("Nowhere", {{Sort::Real}, {Sort::Real}}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::UnresolvedRef);
  }
}

TEST(Expand, RawModeUsesGeneralFeedback) {
  ExpandOptions raw;
  raw.simplify = false;
  raw.special_feedback = false;
  auto u = translate_file("counter", Strategy::IT);
  auto r = simplify_unit(u, raw);
  ASSERT_TRUE(r.top_def());
  EXPECT_EQ(r.find("DelaySum")->trace.count("R6"), 1u);
  EXPECT_GT(r.top_def()->atom.quantifier_count(), 0u);
  // Still the same transformer.
  auto std_r = simplify_unit(u);
  EXPECT_TRUE(equiv(rel_sem(r.top_def()->atom), rel_sem(std_r.top_def()->atom)));
}

TEST(DetectFunctional, Examples) {
  auto ud = detect_functional(rel(reals({"c", "s"}), reals({"a", "s'"}), "(a = s) & (s' = c)"));
  ASSERT_TRUE(ud.bodies);
  EXPECT_EQ(to_string((*ud.bodies)[0]), "s");
  EXPECT_EQ(to_string((*ud.bodies)[1]), "c");

  auto sq = rel(reals({"x"}), reals({"y"}), "(y * y) = x");
  EXPECT_FALSE(detect_functional(sq).bodies);

  auto chain = detect_functional(rel(reals({"f", "e"}), reals({"c", "s'"}), "(c = (f + e)) & (s' = c)"));
  ASSERT_TRUE(chain.bodies);
  EXPECT_EQ(to_string((*chain.bodies)[0]), "f + e");
  EXPECT_EQ(to_string((*chain.bodies)[1]), "f + e");

  // Reversed orientation and an output defined through another.
  auto rev = detect_functional(rel(reals({"x"}), reals({"y", "z"}), "((z + 1) = y) & (x = z)"));
  ASSERT_TRUE(rev.bodies);
  EXPECT_EQ(to_string((*rev.bodies)[0]), "x + 1");
}

TEST(DetectFunctional, LeavesOutputFreeConditionsAlone) {
  // x > 0 restricts the relation, not the legal inputs.
  auto a = rel(reals({"x"}), reals({"y"}), "(y = x) & (0 < x)");
  EXPECT_FALSE(detect_functional(a).bodies);
}

TEST(DetectFunctionalProperty, PreservesSemantics) {
  AtomGen g(11);
  for (int i = 0; i < 200; ++i) {
    AtomicPT f = g.functional("a", 1 + g.pick(2), 1 + g.pick(2));
    // Shuffle the equations and hide the functional form.
    auto parts = conjuncts(f.rel);
    std::reverse(parts.begin(), parts.end());
    AtomicPT r = AtomicPT::relational(f.inputs, f.outputs, ex::conj(parts), f.pre);
    AtomicPT d = detect_functional(r);
    ASSERT_TRUE(d.bodies) << pretty(r);
    EXPECT_TRUE(equiv(rel_sem(r), rel_sem(d))) << pretty(r);
  }
}

TEST(AlphaEquiv, Examples) {
  EXPECT_TRUE(alpha_equiv(func(reals({"x", "s"}), reals({"y", "t"}), {"s", "s + x"}),
                          func(reals({"a", "t"}), reals({"p", "q"}), {"t", "t + a"})));
  EXPECT_TRUE(alpha_equiv(func(reals({"x"}), reals({"y"}), {"x + 1"}), func(reals({"x"}), reals({"y"}), {"1 + x"})));
  EXPECT_FALSE(alpha_equiv(func(reals({"x"}), reals({"y"}), {"x"}), func(reals({"x"}), reals({"y"}), {"x + 0"})));
  EXPECT_FALSE(alpha_equiv(func(reals({"x", "s"}), reals({"y"}), {"x"}), func(reals({"x", "s"}), reals({"y"}), {"s"})));
  // Bound variables and conjunct order.
  EXPECT_TRUE(alpha_equiv(rel(reals({"x"}), reals({"y"}), "(exists u:Real . (u = x)) & (y = x)"),
                          rel(reals({"a"}), reals({"b"}), "(b = a) & (exists w:Real . (w = a))")));
  EXPECT_FALSE(alpha_equiv(rel(reals({"x"}), reals({"y"}), "x - y = 0"), rel(reals({"x"}), reals({"y"}), "y - x = 0")));
}

TEST(CheckCompat, Examples) {
  auto counter = func(reals({"s"}), reals({"y", "t"}), {"s", "s + 1"});
  EXPECT_EQ(check_compat(counter).verdict, Verdict::Compatible);

  auto sq = AtomicPT::functional({Var{"x", Sort::Int}}, {Var{"y", Sort::Int}}, {ex::var("x", Sort::Int)},
                                 ex::eq(ex::mul(ex::var("x", Sort::Int), ex::var("x", Sort::Int)), ex::num(2, Sort::Int)));
  EXPECT_EQ(check_compat(sq).verdict, Verdict::Unknown);

  auto b = Var{"b", Sort::Bool};
  auto never = AtomicPT::functional({b}, {Var{"c", Sort::Bool}}, {ex::var(b)}, ex::land(ex::var(b), ex::lnot(ex::var(b))));
  // Whether or not simplification folds b & !b, no Bool input is legal.
  auto st = check_compat(never);
  EXPECT_EQ(st.verdict, Verdict::Incompatible);

  auto div = block_atom(make_block_type("Div", {}));
  auto dst = check_compat(div);
  ASSERT_EQ(dst.verdict, Verdict::Compatible);
  EXPECT_TRUE(eval_bool(div.pre, dst.witness));
}

// ---------------------------------------------------------------------------
// Rule soundness: each rule against the set semantics of the composite term.

class RuleSoundness : public ::testing::TestWithParam<int> {};

TEST_P(RuleSoundness, AgreesWithTheComposite) {
  int rule = GetParam();
  auto failure = rule_soundness(rule, 500, 100 + rule);
  EXPECT_FALSE(failure) << *failure;
}

INSTANTIATE_TEST_SUITE_P(Rules, RuleSoundness, ::testing::Range(1, 7),
                         [](const auto &info) { return "R" + std::to_string(info.param); });

TEST(RuleShapes, FunctionalRulesAddNoQuantifiers) {
  AtomGen g(7);
  for (int i = 0; i < 100; ++i) {
    AtomicPT a = g.functional("a", 1 + g.pick(2), 2), b = g.functional("b", 2, 1);
    EXPECT_EQ(rules::serial_func(a, b).quantifier_count(), a.quantifier_count() + b.quantifier_count());
    EXPECT_EQ(rules::parallel_func(a, b).quantifier_count(), a.quantifier_count() + b.quantifier_count());
    RuleCase c = rule_case(5, g);
    EXPECT_EQ(c.expanded.rel.quantifier_count(), 0u) << c.shown;
  }
}

// One application of the general feedback rule: occurrences of p and r, and
// the quantifiers it adds, for atoms with one remaining output.
TEST(R6Structure, OccurrencesAndQuantifiers) {
  AtomGen g(107);
  for (int i = 0; i < 50; ++i) {
    R6Shape s = r6_shape(g);
    EXPECT_EQ(s.p_in_pre, 3u);
    EXPECT_EQ(s.r_in_pre, 1u);
    EXPECT_EQ(s.p_in_rel, 1u);
    EXPECT_EQ(s.r_in_rel, 2u);
    EXPECT_EQ(s.q_rel, 3 + s.q_p + 2 * s.q_r);
    EXPECT_EQ(s.q_pre, 4 + 3 * s.q_p + s.q_r);
  }
}

TEST(R6Structure, ExpandPrefersSpecialForm) {
  // Loop-free generated diagrams: FP needs feedback everywhere, yet no
  // feedback takes the general rule and no quantifier appears.
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Diagram d = gen_random_diagram(seed);
    TranslationOptions o;
    o.strategy = Strategy::FP;
    auto r = simplify_unit(translate_model(d, o));
    ASSERT_TRUE(r.top_def()) << seed;
    EXPECT_EQ(r.top_def()->trace.count("R6"), 0u) << seed;
    EXPECT_EQ(r.top_def()->trace.quantifiers_introduced(), 0) << seed;
  }
}

// ---------------------------------------------------------------------------
// End to end

TEST(ExpandProperty, CorpusTermsKeepTheirMeaning) {
  for (const auto &m : corpus_models()) {
    if (m == "delaysum-loop") continue;
    for (auto s : {Strategy::FP, Strategy::IT, Strategy::NFBT})
      for (bool flat : {false, true}) {
        auto u = translate_file(m, s, flat);
        auto r = simplify_unit(u);
        ASSERT_TRUE(r.top_def());
        RelSem composite;
        try {
          composite = rel_sem(u.top_def().term, u.resolver());
        } catch (const Error &e) {
          ASSERT_EQ(e.code(), ErrorCode::SpaceTooLarge);
          continue;
        }
        EXPECT_TRUE(equiv(composite, rel_sem(r.top_def()->atom))) << m << " " << strategy_name(s) << flat;
      }
  }
}

TEST(ExpandProperty, StrategiesAgreeOnGeneratedDiagrams) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Diagram d = gen_random_diagram(seed);
    std::optional<RelSem> first;
    for (auto s : {Strategy::FP, Strategy::IT, Strategy::NFBT}) {
      TranslationOptions o;
      o.strategy = s;
      auto r = simplify_unit(translate_model(d, o));
      ASSERT_TRUE(r.top_def());
      RelSem sem = rel_sem(r.top_def()->atom);
      if (!first) first = sem;
      else EXPECT_TRUE(equiv(*first, sem)) << seed << " " << strategy_name(s);
    }
  }
}
