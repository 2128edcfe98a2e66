#include <gtest/gtest.h>

#include "mixrl/mathverify.hpp"
#include "mixrl/rng.hpp"
#include "oracles.hpp"

using namespace mixrl::mathverify;

TEST(Parse, FracIsDivision) {
  auto r = parse_expression("\\frac{1}{2}");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.expr(), Expr::binary(ExprKind::Div, Expr::integer(1), Expr::integer(2)));
}

TEST(Parse, ImplicitMultiplication) {
  auto r = parse_expression("2x + 1");
  ASSERT_TRUE(r.ok());
  auto want = Expr::binary(ExprKind::Add, Expr::binary(ExprKind::Mul, Expr::integer(2), Expr::symbol("x")),
                           Expr::integer(1));
  EXPECT_EQ(r.expr(), want);
}

TEST(Parse, UnbalancedParenReportsEnd) {
  auto r = parse_expression("((3");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().position, 3u);
}

TEST(Parse, Rejects) {
  for (const char* s : {"", "1 +", "\\frac{1}", "x 2", "= 3", "\\unknown{1}"}) {
    EXPECT_FALSE(parse_expression(s).ok()) << s;
  }
}

TEST(Extract, Examples) {
  EXPECT_EQ(extract_final_expression("so \\boxed{7}"), "7");
  EXPECT_EQ(extract_final_expression("the answer is 1/2"), "1/2");
  EXPECT_EQ(extract_final_expression("x=3"), "x=3");
}

TEST(Equivalent, Examples) {
  EXPECT_TRUE(equivalent("1/2", "0.5"));
  EXPECT_TRUE(equivalent("x+x", "2x"));
  EXPECT_FALSE(equivalent("2", "3"));
  EXPECT_FALSE(equivalent("((", "1"));
}

TEST(Equivalent, ExactRationalsDoNotNeedTolerance) {
  EXPECT_TRUE(equivalent("1/3", "2/6", 0.0));
  EXPECT_FALSE(equivalent("1/3", "0.333333", 1e-9));
}

TEST(Evaluate, Singularities) {
  EXPECT_FALSE(evaluate(parse_expression("1/0").expr()).has_value());
  EXPECT_FALSE(evaluate(parse_expression("\\sqrt{-1}").expr()).has_value());
  EXPECT_FALSE(evaluate(parse_expression("x").expr()).has_value());
  EXPECT_DOUBLE_EQ(*evaluate(parse_expression("x^2").expr(), {{"x", 3.0}}), 9.0);
}

TEST(Evaluate, ExactFractions) {
  auto r = evaluate_exact(parse_expression("\\frac{3}{4} + 1/4").expr());
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(*r, (Rational{1, 1}));
  EXPECT_FALSE(evaluate_exact(parse_expression("\\sqrt{2}").expr()).has_value());
}

TEST(FreeSymbols, PiIsConstant) {
  EXPECT_EQ(free_symbols(parse_expression("2\\pi r + y_1").expr()), (std::set<std::string>{"r", "y_1"}));
}

TEST(GoldenCorpus, AllPairsClassified) {
  for (const auto& p : mixrl::oracle::math_golden_corpus()) {
    ASSERT_EQ(mixrl::oracle::numerically_equivalent(p), p.equivalent) << "label: " << p.a << " | " << p.b;
    EXPECT_EQ(equivalent(p.a, p.b), p.equivalent) << p.a << " | " << p.b;
    EXPECT_EQ(equivalent(p.b, p.a), p.equivalent) << "swapped: " << p.a << " | " << p.b;
  }
}

namespace {

Expr random_expr(mixrl::Rng& rng, int depth) {
  if (depth == 0 || rng.uniform() < 0.25) {
    switch (rng.below(3)) {
      case 0: return Expr::integer(static_cast<std::int64_t>(rng.below(20)));
      case 1: return Expr::symbol(std::string(1, static_cast<char>('a' + rng.below(3))));
      default: return Expr::real(0.5 + static_cast<double>(rng.below(8)));
    }
  }
  switch (rng.below(7)) {
    case 0: return Expr::binary(ExprKind::Add, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 1: return Expr::binary(ExprKind::Sub, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 2: return Expr::binary(ExprKind::Mul, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 3: return Expr::binary(ExprKind::Div, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 4: return Expr::binary(ExprKind::Pow, random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 5: return Expr::unary(ExprKind::Neg, random_expr(rng, depth - 1));
    default: return Expr::function(rng.uniform() < 0.5 ? "sqrt" : "sin", random_expr(rng, depth - 1));
  }
}

}  // namespace

TEST(RoundTrip, UnparseParsesBackToSameTree) {
  mixrl::Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto e = random_expr(rng, 4);
    auto text = unparse(e);
    auto back = parse_expression(text);
    ASSERT_TRUE(back.ok()) << text << ": " << back.error().message;
    EXPECT_EQ(back.expr(), e) << text;
    EXPECT_EQ(unparse(back.expr()), text);
  }
}

TEST(RoundTrip, ParsedInputsAreStable) {
  for (const auto& p : mixrl::oracle::math_golden_corpus()) {
    for (const auto* s : {&p.a, &p.b}) {
      auto first = parse_expression(*s);
      ASSERT_TRUE(first.ok()) << *s;
      auto second = parse_expression(unparse(first.expr()));
      ASSERT_TRUE(second.ok()) << unparse(first.expr());
      EXPECT_EQ(second.expr(), first.expr()) << *s;
    }
  }
}
