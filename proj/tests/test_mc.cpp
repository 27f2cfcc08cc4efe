#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "mdd/closedform.hpp"
#include "mdd/errors.hpp"
#include "mdd/gstar.hpp"
#include "mdd/mc.hpp"

using namespace mdd;

namespace {

const CoefficientField kField = CoefficientField::constant(0.05, 0.4);

MCConfig small_config(std::uint64_t n, double dt) {
  MCConfig c;
  c.n_paths = n;
  c.dt = dt;
  c.horizon = 100.0;
  c.seed = 17;
  c.monitoring = Monitoring::Bridge;
  return c;
}

}  // namespace

TEST(PathRng, DeterministicAndDistinctStreams) {
  PathRng a(5, 3), b(5, 3), c(5, 4), d(6, 3);
  std::set<std::uint64_t> firsts;
  for (int k = 0; k < 100; ++k) {
    const auto va = a.next();
    EXPECT_EQ(va, b.next());
    if (k == 0) {
      firsts.insert(va);
      firsts.insert(c.next());
      firsts.insert(d.next());
    }
  }
  EXPECT_EQ(firsts.size(), 3u);
}

TEST(PathRng, Moments) {
  PathRng r(1, 0);
  const int n = 200000;
  double su = 0, sz = 0, sz2 = 0, se = 0;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    su += u;
    const double z = r.normal();
    sz += z;
    sz2 += z * z;
    se += r.exponential();
  }
  EXPECT_NEAR(su / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sz / n, 0.0, 5 / std::sqrt(n));
  EXPECT_NEAR(sz2 / n, 1.0, 5 * std::sqrt(2.0 / n));
  EXPECT_NEAR(se / n, 1.0, 5 / std::sqrt(n));
}

TEST(SimulatePath, LogReturnMoments) {
  const double rho = 0.08, T = 1.0;
  MCConfig c = small_config(1, 0.01);
  c.horizon = T;
  const int n = 4000;
  double m = 0, m2 = 0;
  for (int p = 0; p < n; ++p) {
    const auto path = simulate_path(kField, rho, {1.0, 1.0, 0.0}, c, static_cast<std::uint64_t>(p));
    ASSERT_EQ(path.size(), 101u);
    const double l = std::log(path.back().x);
    m += l;
    m2 += l * l;
    for (const auto& pt : path) ASSERT_TRUE(pt.s - pt.y <= pt.x * (1 + 1e-12) && pt.x <= pt.s * (1 + 1e-12));
  }
  m /= n;
  const double var = m2 / n - m * m;
  const double mu = (rho - 0.05 - 0.08) * T, v = 0.16 * T;
  EXPECT_NEAR(m, mu, 4 * std::sqrt(v / n));
  EXPECT_NEAR(var, v, 4 * v * std::sqrt(2.0 / n));
}

TEST(PricePolicy, LinePolicyMatchesClosedForm) {
  const auto P = MarketParams::make(0.1, 1.0, PayoffKind::FloatingStrike);
  const auto g = gamma_exponents(0.05, 0.4, 0.1);
  const double gs = solve_gstar_floating(g.gamma1, g.gamma2, 1.0).g_star;
  const State st{0.7, 1.0, 0.8};
  const double b = gs * (st.s - st.y);
  ASSERT_LT(b, st.s);
  const double v = floating_strike_coeffs(st.s, st.y, b, g.gamma1, g.gamma2, 1.0).value(st.x);
  const auto est = price_policy(LinePolicy(gs), P, kField, st, small_config(20000, 2e-3));
  EXPECT_NEAR(est.mean, v, 4 * est.std_err);
  EXPECT_LE(est.truncation_bound, est.std_err);
  EXPECT_EQ(est.n_paths, 20000u);
}

TEST(PricePolicy, ImmediateExercise) {
  const auto P = MarketParams::make(0.1, 1.0, PayoffKind::FloatingStrike);
  const State st{0.9, 1.0, 0.5};
  const auto est = price_policy(LinePolicy(1.0), P, kField, st, small_config(100, 1e-3));
  EXPECT_EQ(est.mean, payoff(P.kind, 1.0, 0.9, 1.0, 0.5));
  EXPECT_EQ(est.std_err, 0.0);
  EXPECT_EQ(est.n_exercised, 100u);
}

TEST(PricePolicy, ReproducibleAcrossThreadsAndKernels) {
  const auto P = MarketParams::make(0.1, 1.0, PayoffKind::FloatingStrike);
  const State st{0.5, 1.0, 0.8};
  MCConfig c = small_config(9000, 2e-3);
  c.monitoring = Monitoring::Discrete;
  setenv("MDD_THREADS", "1", 1);
  const auto a = price_policy(LinePolicy(3.0), P, kField, st, c);
  setenv("MDD_THREADS", "3", 1);
  const auto b = price_policy(LinePolicy(3.0), P, kField, st, c);
  c.simd = "scalar";
  const auto d = price_policy(LinePolicy(3.0), P, kField, st, c);
  unsetenv("MDD_THREADS");
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_err, b.std_err);
  EXPECT_EQ(a.mean, d.mean);
  EXPECT_EQ(a.n_exercised, d.n_exercised);
  EXPECT_GT(a.std_err, 0.0);
}

TEST(PricePolicy, AntitheticPairsReduceVariance) {
  const auto P = MarketParams::make(0.1, 1.0, PayoffKind::FloatingStrike);
  const State st{0.5, 1.0, 0.8};
  MCConfig c = small_config(8000, 2e-3);
  const auto plain = price_policy(LinePolicy(3.0), P, kField, st, c);
  c.antithetic = true;
  const auto anti = price_policy(LinePolicy(3.0), P, kField, st, c);
  EXPECT_NEAR(anti.mean, plain.mean, 4 * std::hypot(anti.std_err, plain.std_err));
  EXPECT_GT(anti.std_err, 0.0);
}

TEST(PricePolicy, HorizonDominates) {
  PriceEstimate e;
  e.std_err = 1e-3;
  e.truncation_bound = 0.5;
  try {
    check_horizon(e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::HorizonDominates);
  }
  e.truncation_bound = 1e-3;
  EXPECT_NO_THROW(check_horizon(e));
}

TEST(MCConfig, Validation) {
  MCConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c.dt = 1e-3;
  c.n_paths = 0;
  EXPECT_THROW(c.validate(), Error);
  c.n_paths = 1;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.horizon_for(0.1), 500.0);
}
