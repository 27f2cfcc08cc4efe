#include <gtest/gtest.h>

#include <cmath>

#include "mdd/closedform.hpp"
#include "mdd/errors.hpp"
#include "mdd/model.hpp"

using namespace mdd;

namespace {

// Solves C1 b^g1 + C2 b^g2 = p, g1 C1 b^g1 + g2 C2 b^g2 = b q by Cramer's rule.
std::pair<double, double> solve_fit(double b, double g1, double g2, double p, double q) {
  const double a11 = std::pow(b, g1), a12 = std::pow(b, g2);
  const double a21 = g1 * a11, a22 = g2 * a12;
  const double det = a11 * a22 - a12 * a21;
  return {(p * a22 - a12 * b * q) / det, (a11 * b * q - a21 * p) / det};
}

}  // namespace

TEST(ClosedForm, FixedStrikeStopsAndFitsAtBoundary) {
  const auto g = gamma_exponents(0.03, 0.28, 0.05);
  const double s = 1.4, y = 0.9, b = 0.7, K = 0.8;
  const auto c = fixed_strike_coeffs(s, y, b, g.gamma1, g.gamma2, K);
  const auto [e1, e2] = solve_fit(b, g.gamma1, g.gamma2, K - s + y, 0.0);
  EXPECT_NEAR(c.c1, e1, 1e-12 * std::abs(e1));
  EXPECT_NEAR(c.c2, e2, 1e-12 * std::abs(e2));
  EXPECT_NEAR(c.value(b), payoff(PayoffKind::FixedStrike, K, b, s, y), 1e-14);
  EXPECT_NEAR(c.dx(b), 0.0, 1e-13);
}

TEST(ClosedForm, FloatingStrikeStopsAndFitsAtBoundary) {
  const auto g = gamma_exponents(0.04, 0.35, 0.03);
  const double s = 2.0, y = 0.5, b = 1.9, K = 1.2;
  const auto c = floating_strike_coeffs(s, y, b, g.gamma1, g.gamma2, K);
  const auto [e1, e2] = solve_fit(b, g.gamma1, g.gamma2, K * b - s + y, K);
  EXPECT_NEAR(c.c1, e1, 1e-12 * std::abs(e1));
  EXPECT_NEAR(c.c2, e2, 1e-12 * std::abs(e2));
  EXPECT_NEAR(c.value(b), K * b - s + y, 1e-13);
  EXPECT_NEAR(c.dx(b), K, 1e-13);
}

TEST(ClosedForm, DerivativesMatchDifferences) {
  const auto g = gamma_exponents(0.05, 0.3, 0.04);
  const auto c = floating_strike_coeffs(1.5, 0.4, 1.3, g.gamma1, g.gamma2, 1.0);
  const double x = 1.2, h = 1e-5;
  EXPECT_NEAR(c.dx(x), (c.value(x + h) - c.value(x - h)) / (2 * h), 1e-8);
  EXPECT_NEAR(c.dxx(x), (c.dx(x + h) - c.dx(x - h)) / (2 * h), 1e-7);
}

TEST(ClosedForm, SolvesGeneratorEquation) {
  const double d = 0.03, sg = 0.25, r = 0.06;
  const auto g = gamma_exponents(d, sg, r);
  const auto c = fixed_strike_coeffs(1.0, 0.6, 0.55, g.gamma1, g.gamma2, 1.0);
  for (double x : {0.41, 0.45, 0.5}) {
    const double lv = (r - d) * x * c.dx(x) + 0.5 * sg * sg * x * x * c.dxx(x) - r * c.value(x);
    EXPECT_NEAR(lv, 0.0, 1e-13);
  }
}

TEST(ClosedForm, Payoffs) {
  EXPECT_DOUBLE_EQ(payoff(PayoffKind::FixedStrike, 1.0, 0.5, 1.2, 0.4), 0.2);
  EXPECT_DOUBLE_EQ(payoff(PayoffKind::FixedStrike, 1.0, 0.5, 2.0, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(payoff(PayoffKind::FloatingStrike, 2.0, 0.5, 1.2, 0.4), 0.2);
  EXPECT_DOUBLE_EQ(payoff_dx(PayoffKind::FloatingStrike, 2.0, 0.5, 1.2, 0.4), 2.0);
  EXPECT_DOUBLE_EQ(payoff_dx(PayoffKind::FloatingStrike, 1.0, 0.5, 1.2, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(payoff_dx(PayoffKind::FixedStrike, 1.0, 0.5, 1.2, 0.4), 0.0);
}

TEST(ClosedForm, DegenerateExponents) {
  try {
    fixed_strike_coeffs(1.0, 0.5, 0.6, 2.0, 2.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateExponents);
  }
}
