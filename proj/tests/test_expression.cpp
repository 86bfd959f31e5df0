#include "fixtures.hpp"
#include "varlab/expression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace varlab;
using fx::vec;

TEST(Expression, EvaluatesAgainstNativeArithmetic) {
  const Expression e = Expression::parse("x1^2 - 3*x2 + sin(x1)*exp(-x2)/2", 2);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 50; ++k) {
    const double a = u(rng), b = u(rng);
    EXPECT_NEAR(e.evaluate(vec({a, b})), a * a - 3 * b + std::sin(a) * std::exp(-b) / 2, 1e-13);
  }
}

TEST(Expression, BareXIsFirstVariable) {
  EXPECT_DOUBLE_EQ(Expression::parse("x*x", 1).evaluate(vec({3})), 9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x1*x", 1).evaluate(vec({-2})), 4.0);
}

TEST(Expression, PrecedenceAndUnaryMinus) {
  EXPECT_DOUBLE_EQ(Expression::parse("-x^2", 1).evaluate(vec({3})), -9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2", 1).evaluate(vec({0})), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1 - 2 - 3", 1).evaluate(vec({0})), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("8/4/2", 1).evaluate(vec({0})), 1.0);
}

TEST(Expression, GradientMatchesCentralDifferences) {
  const Expression e = Expression::parse("tanh(x1*x2) + log(1 + x3^2) + sqrt(2 + cos(x1)) - max(x2, x3)", 3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 30; ++k) {
    Vec x = vec({u(rng), u(rng), u(rng)});
    if (std::abs(x(1) - x(2)) < 1e-3) continue;
    Vec g;
    const double val = e.value_and_gradient(x, g);
    EXPECT_DOUBLE_EQ(val, e.evaluate(x));
    for (int i = 0; i < 3; ++i) {
      Vec xp = x, xm = x;
      xp(i) += 1e-6;
      xm(i) -= 1e-6;
      EXPECT_NEAR(g(i), (e.evaluate(xp) - e.evaluate(xm)) / 2e-6, 1e-6);
    }
  }
}

TEST(Expression, AbsAndMinPickActiveBranch) {
  Vec g;
  Expression::parse("abs(x)", 1).value_and_gradient(vec({-2}), g);
  EXPECT_DOUBLE_EQ(g(0), -1.0);
  Expression::parse("min(x1, 2*x1)", 1).value_and_gradient(vec({1}), g);
  EXPECT_DOUBLE_EQ(g(0), 1.0);
}

TEST(Expression, ParseErrorsCarryOffset) {
  try {
    Expression::parse("x1 + * 2", 1);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position, 5u);
  }
  EXPECT_THROW(Expression::parse("x3", 2), ParseError);
  EXPECT_THROW(Expression::parse("foo(x)", 1), ParseError);
  EXPECT_THROW(Expression::parse("(x + 1", 1), ParseError);
  EXPECT_THROW(Expression::parse("", 1), ParseError);
}
