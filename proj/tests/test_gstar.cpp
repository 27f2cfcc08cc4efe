#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mdd/errors.hpp"
#include "mdd/gstar.hpp"
#include "mdd/model.hpp"

using namespace mdd;

namespace {

// F1 - F2 in long double, straight from the definition.
long double f_diff(long double x, long double b1, long double b2, long double K) {
  const long double A = (b1 - 1) * (b2 - 1) * K;
  return (A * x - b1 * (b2 - 1)) * std::pow(x, b1) - (A * x - b2 * (b1 - 1)) * std::pow(x, b2);
}

}  // namespace

TEST(GStar, RootIsBracketedBySignChange) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ub1(1.05, 6.0), ub2(-4.0, -0.05), uk(0.3, 3.0);
  for (int k = 0; k < 300; ++k) {
    const double b1 = ub1(gen), b2 = ub2(gen), K = uk(gen);
    const auto r = solve_gstar_floating(b1, b2, K);
    const long double lo = r.g_star * (1 - 1e-10L), hi = r.g_star * (1 + 1e-10L);
    EXPECT_GT(f_diff(lo, b1, b2, K), 0.0L) << b1 << " " << b2 << " " << K;
    EXPECT_LT(f_diff(hi, b1, b2, K), 0.0L) << b1 << " " << b2 << " " << K;
    EXPECT_GT(r.g_star, std::max(1.0, r.h1));
    EXPECT_LE(r.bracket[0], r.g_star);
    EXPECT_GE(r.bracket[1], r.g_star);
  }
}

TEST(GStar, ExceedsRhoOverDeltaK) {
  for (double rho : {0.01, 0.05, 0.2}) {
    for (double delta : {0.01, 0.05, 0.2}) {
      for (double K : {0.5, 1.0, 2.0}) {
        const auto g = gamma_exponents(delta, 0.3, rho);
        const auto r = solve_gstar_floating(g.gamma1, g.gamma2, K);
        EXPECT_GT(r.h1, rho / (delta * K));
        EXPECT_GT(r.g_star, r.h1);
      }
    }
  }
}

TEST(GStar, HMatchesLinearFactorRoot) {
  const double b1 = 2.5, b2 = -1.5, K = 0.9;
  const double h1 = gstar_h(1, b1, b2, K), h2 = gstar_h(2, b1, b2, K);
  EXPECT_NEAR((b1 - 1) * (b2 - 1) * K * h1 - b1 * (b2 - 1), 0.0, 1e-14);
  EXPECT_NEAR((b1 - 1) * (b2 - 1) * K * h2 - b2 * (b1 - 1), 0.0, 1e-14);
}

TEST(GStar, SecondRootOrdering) {
  for (double b2 : {-1.2, -2.0, -3.5}) {
    for (double b1 : {1.5, 3.0}) {
      const double K = 1.1;
      const auto r = solve_gstar_floating(b1, b2, K);
      const auto g2 = gstar_second_root(b1, b2, K);
      ASSERT_TRUE(g2.has_value());
      EXPECT_LT(*g2, r.h2);
      EXPECT_LT(r.h2, 1.0 / K);
      EXPECT_LT(1.0 / K, r.h1);
      EXPECT_LT(r.h1, r.g_star);
      EXPECT_LT(std::abs(static_cast<double>(f_diff(*g2, b1, b2, K))), 1e-10);
    }
  }
}

TEST(GStar, DerivativesMatchDifferences) {
  const double b1 = 2.2, b2 = -0.7, K = 1.3, x = 1.7, h = 1e-6;
  const auto d = F_pair_dx(x, b1, b2, K), dd = F_pair_dxx(x, b1, b2, K);
  const auto p = F_pair(x + h, b1, b2, K), m = F_pair(x - h, b1, b2, K);
  EXPECT_NEAR(d.f1, (p.f1 - m.f1) / (2 * h), 1e-6);
  EXPECT_NEAR(d.f2, (p.f2 - m.f2) / (2 * h), 1e-6);
  const auto dp = F_pair_dx(x + h, b1, b2, K), dm = F_pair_dx(x - h, b1, b2, K);
  EXPECT_NEAR(dd.f1, (dp.f1 - dm.f1) / (2 * h), 1e-5);
  EXPECT_NEAR(dd.f2, (dp.f2 - dm.f2) / (2 * h), 1e-5);
}

TEST(GStar, FixedStrikeIsOne) {
  EXPECT_EQ(solve_gstar_fixed(2.0, -0.5), 1.0);
  EXPECT_THROW(solve_gstar_fixed(0.5, -0.5), Error);
  EXPECT_THROW(solve_gstar_floating(2.0, 0.5, 1.0), Error);
}
