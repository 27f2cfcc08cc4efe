#include <gtest/gtest.h>

#include <cmath>

#include "mdd/config.hpp"
#include "mdd/diagnostics.hpp"
#include "mdd/errors.hpp"

using namespace mdd;

namespace {

RunConfig config(const char* kind, double K) {
  const std::string text = std::string(R"({"model": {"family": "constant", "delta": 0.05, "sigma": 0.4},
    "params": {"rho": 0.1, "K": )") + std::to_string(K) + R"(, "payoff_kind": ")" + kind + R"("},
    "state0": {"x": 0.7, "s": 1.0, "y": 0.8}, "meshes": {"n_s": 40, "n_y": 40, "ladder_depth": 2}})";
  return parse_config(text);
}

const Pipeline& fixed_pipeline() {
  static const Pipeline p = build_pipeline(config("fixed", 1.0));
  return p;
}

const Pipeline& floating_pipeline() {
  static const Pipeline p = build_pipeline(config("floating", 1.0));
  return p;
}

}  // namespace

TEST(Generator, ExactPowerSolution) {
  const auto field = CoefficientField::constant(0.03, 0.3);
  const auto g = gamma_exponents(0.03, 0.3, 0.05);
  const ValueFn v = [&](double x, double, double) { return 2.0 * std::pow(x, g.gamma1) + 0.5 * std::pow(x, g.gamma2); };
  const auto r = generator_residual(v, field, 0.05, 1.5, 2.0, 1.0);
  EXPECT_LE(std::abs(r.residual), 1e-6 * r.scale);
}

TEST(Generator, NonSolutionHasExpectedResidual) {
  const auto field = CoefficientField::constant(0.03, 0.3);
  const ValueFn v = [](double x, double, double) { return x * x; };
  const double x = 1.5, rho = 0.05;
  const auto r = generator_residual(v, field, rho, x, 2.0, 1.0);
  const double expect = (rho - 0.03) * x * 2 * x + 0.5 * 0.09 * x * x * 2 - rho * x * x;
  EXPECT_NEAR(r.residual, expect, 1e-6);
}

TEST(Generator, TooCloseToEdge) {
  const auto field = CoefficientField::constant(0.03, 0.3);
  const ValueFn v = [](double x, double, double) { return x; };
  try {
    generator_residual(v, field, 0.05, 2.0 - 1e-7, 2.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooCloseToKink);
  }
}

TEST(Generator, Region1AnalyticAndDifferenceModesAgree) {
  const auto& pv = *floating_pipeline().value;
  const double s = 1.0, y = 0.85;
  const auto r = pv.evaluate(0.2, s, y);
  ASSERT_EQ(r.branch, Branch::Region1);
  const auto a = generator_residual(pv, 0.2, s, y, Derivatives::Analytic);
  const auto f = generator_residual(pv, 0.2, s, y, Derivatives::FiniteDifference);
  EXPECT_LE(std::abs(a.residual), 1e-10 * a.scale);
  EXPECT_LE(std::abs(f.residual), 1e-5 * f.scale);
}

TEST(SmoothFit, HoldsAtBoundaryAndDetectsDisplacement) {
  for (const Pipeline* p : {&fixed_pipeline(), &floating_pipeline()}) {
    const auto& pv = *p->value;
    const double s = 1.0, y = 0.85;
    const double b = pv.boundary().b_at(s, y);
    ASSERT_LT(b, s);
    ASSERT_GT(b, s - y);
    const double scale = value_scale(pv.params(), b) / b;
    EXPECT_LE(std::abs(smooth_fit_residual(pv, s, y)), 1e-6 * scale);
    EXPECT_GT(std::abs(smooth_fit_residual(pv, s, y, 0.95 * b)), 1e-3 * scale);
  }
}

TEST(SmoothFit, NotApplicableAboveDiagonal) {
  const auto& pv = *floating_pipeline().value;
  try {
    smooth_fit_residual(pv, 2.0, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotApplicable);
  }
}

TEST(Reflection, D2HoldsInRegion1) {
  for (const Pipeline* p : {&fixed_pipeline(), &floating_pipeline()}) {
    const auto& pv = *p->value;
    for (double y : {0.7, 0.85, 0.95}) {
      const double s = 1.0;
      const double r = normal_reflection_residual(pv, s, y, Plane::D2);
      EXPECT_LE(std::abs(r), 1e-6 * value_scale(pv.params(), s - y) / s) << y;
    }
  }
}

TEST(Reflection, GridResidualsAreSmall) {
  const auto& p = floating_pipeline();
  ASSERT_TRUE(p.region2);
  const auto r = grid_reflection_residual(*p.region2);
  EXPECT_LE(r.s_eq, 1e-4);
  EXPECT_LE(r.y_eq, 1e-4);
}

TEST(Sampling, StatesAreValidAndReproducible) {
  const auto a = sample_states({1.0, 3.0}, 500, 4);
  const auto b = sample_states({1.0, 3.0}, 500, 4);
  ASSERT_EQ(a.size(), 500u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(State::valid(a[k].x, a[k].s, a[k].y));
    EXPECT_GE(a[k].s, 1.0);
    EXPECT_LE(a[k].s, 3.0);
    EXPECT_EQ(a[k].x, b[k].x);
  }
}

TEST(Variational, StoppingBranchEqualsPayoffAndRegion1Dominates) {
  for (const Pipeline* p : {&fixed_pipeline(), &floating_pipeline()}) {
    const auto& pv = *p->value;
    const auto states = sample_states({1.0, 4.0}, 2000, 9);
    const auto rep = variational_check(pv, states);
    EXPECT_EQ(rep.samples + rep.skipped, states.size());
    EXPECT_EQ(rep.stop_not_equal, 0u);
    EXPECT_EQ(rep.not_strict, 0u);
    // Any shortfall below the payoff comes from the b > s regions only.
    for (const auto& st : states) {
      const auto r = pv.evaluate(st.x, st.s, st.y);
      const double g = payoff(pv.params().kind, pv.params().K, st.x, st.s, st.y);
      if (r.branch != Branch::Region2) EXPECT_GE(r.value, g - 1e-10);
    }
  }
}

TEST(Scale, ValueScale) {
  EXPECT_EQ(value_scale(MarketParams::make(0.1, 0.8, PayoffKind::FixedStrike), 3.0), 0.8);
  EXPECT_DOUBLE_EQ(value_scale(MarketParams::make(0.1, 0.8, PayoffKind::FloatingStrike), 3.0), 2.4);
}
