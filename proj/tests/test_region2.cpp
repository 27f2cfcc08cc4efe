#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mdd/boundary.hpp"
#include "mdd/closedform.hpp"
#include "mdd/errors.hpp"
#include "mdd/region2.hpp"

using namespace mdd;

namespace {

constexpr double kRho = 0.05;
const CoefficientField kField = CoefficientField::constant(0.03, 0.3);

Region2Geometry box_geometry(std::vector<double> sm, std::vector<double> ym) {
  Region2Geometry g;
  g.s_mesh = std::move(sm);
  g.y_mesh = std::move(ym);
  g.mask.assign(g.ns() * g.ny(), 1);
  for (std::size_t i = 0; i < g.ns(); ++i) g.mask[g.idx(i, 0)] = 0;
  g.sbar_pos.assign(g.mask.size(), std::numeric_limits<double>::quiet_NaN());
  g.curve_pos.assign(g.mask.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < g.ns(); ++i) g.curve_pos[g.idx(i, g.ny() - 1)] = g.y_mesh.back() + 0.01;
  g.curve_value = [](std::size_t, std::size_t, double) { return 0.0; };
  g.sbar_value = [](std::size_t, std::size_t, double) { return 0.0; };
  return g;
}

std::vector<double> uniform(double lo, double hi, std::size_t n) {
  std::vector<double> m(n + 1);
  for (std::size_t k = 0; k <= n; ++k) m[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n);
  return m;
}

// C1 = z^-a, C2 = a/(g1-g2-a) z^(g1-g2-a) makes d/dz [C1 x^g1 + C2 x^g2] vanish at x = z.
struct Manufactured {
  double a, g1, g2;
  double c1(double z) const { return std::pow(z, -a); }
  double c2(double z) const { return a / (g1 - g2 - a) * std::pow(z, g1 - g2 - a); }
};

}  // namespace

TEST(Region2, ManufacturedSolutionSecondOrderInS) {
  const auto g = gamma_exponents(0.03, 0.3, kRho);
  const Manufactured m{0.7, g.gamma1, g.gamma2};
  double prev = 0.0;
  for (std::size_t n : {8, 16, 32}) {
    const auto op = assemble_system(kField, kRho, box_geometry(uniform(1.0, 2.0, n), uniform(0.0, 0.5, 5)));
    const auto& geo = op.geometry;
    std::vector<double> c1(geo.mask.size()), c2(geo.mask.size());
    for (std::size_t i = 0; i < geo.ns(); ++i)
      for (std::size_t j = 0; j < geo.ny(); ++j) {
        c1[geo.idx(i, j)] = m.c1(geo.s_mesh[i]);
        c2[geo.idx(i, j)] = m.c2(geo.s_mesh[i]);
      }
    const double r = op.truncation_residual(c1, c2);
    EXPECT_GT(r, 0.0);
    if (prev > 0.0) EXPECT_GT(prev / r, 3.5) << n;
    prev = r;
  }
}

TEST(Region2, ManufacturedSolutionSecondOrderInY) {
  const auto g = gamma_exponents(0.03, 0.3, kRho);
  const Manufactured m{0.4, g.gamma1, g.gamma2};
  const double s0 = 2.0;
  double prev = 0.0;
  for (std::size_t n : {8, 16, 32}) {
    const auto op = assemble_system(kField, kRho, box_geometry({s0}, uniform(0.0, 1.0, n)));
    const auto& geo = op.geometry;
    std::vector<double> c1(geo.mask.size()), c2(geo.mask.size());
    for (std::size_t j = 0; j < geo.ny(); ++j) {
      c1[geo.idx(0, j)] = m.c1(s0 - geo.y_mesh[j]);
      c2[geo.idx(0, j)] = m.c2(s0 - geo.y_mesh[j]);
    }
    const double r = op.truncation_residual(c1, c2);
    EXPECT_GT(r, 0.0);
    if (prev > 0.0) EXPECT_GT(prev / r, 3.5) << n;
    prev = r;
  }
}

TEST(Region2, SingleCellRecoversTwoTermData) {
  const auto g = gamma_exponents(0.03, 0.3, kRho);
  const double A = 0.2, B = 0.7;
  auto v = [&](double x) { return A * std::pow(x, g.gamma1) + B * std::pow(x, g.gamma2); };
  Region2Geometry geo = box_geometry({1.0, 1.2}, {0.0, 0.3});
  geo.mask = {0, 1, 0, 0};
  geo.sbar_pos[geo.idx(0, 1)] = 1.1;
  geo.curve_pos[geo.idx(0, 1)] = 0.4;
  geo.sbar_value = [&](std::size_t, std::size_t, double x) { return v(x); };
  geo.curve_value = [&](std::size_t, std::size_t, double x) { return v(x); };
  const auto grid = solve_system(assemble_system(kField, kRho, geo));
  const std::size_t k = grid.geometry().idx(0, 1);
  EXPECT_NEAR(grid.c1[k], A, 1e-12);
  EXPECT_NEAR(grid.c2[k], B, 1e-12);
  EXPECT_NEAR(grid.node_value(0, 1, 0.8), v(0.8), 1e-12);
}

TEST(Region2, TruncationColumnClosure) {
  const auto g = gamma_exponents(0.03, 0.3, kRho);
  Region2Geometry geo = box_geometry({1.0}, {0.0, 0.3});
  geo.curve_pos[geo.idx(0, 1)] = 0.5;
  geo.curve_value = [](std::size_t, std::size_t, double) { return 0.25; };
  const auto grid = solve_system(assemble_system(kField, kRho, geo));
  const std::size_t k = grid.geometry().idx(0, 1);
  EXPECT_EQ(grid.c1[k], 0.0);
  EXPECT_NEAR(grid.c2[k] * std::pow(1.0 - 0.4, g.gamma2), 0.25, 1e-14);
}

TEST(Region2, EmptyMaskIsAnError) {
  Region2Geometry geo = box_geometry({1.0, 2.0}, {0.0, 0.3});
  std::fill(geo.mask.begin(), geo.mask.end(), 0);
  try {
    assemble_system(kField, kRho, geo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyRegion);
  }
}

TEST(Region2, SolvedSystemSatisfiesItsEquations) {
  const auto field = CoefficientField::constant(0.03, std::sqrt(0.08));
  const auto P = MarketParams::make(0.03, 1.0, PayoffKind::FloatingStrike);
  MeshSpec ms;
  ms.ladder_depth = 0;
  const auto fam = build_family(stretched_mesh(1.0, 50.0, 40, 4.0), P.kind, field, P, ms);
  double ytop = 0.0;
  for (const auto& sl : fam.slices())
    for (const auto& c : sl.crossings) ytop = std::max(ytop, c.y);
  const auto grid = solve_region2(fam, P.kind, field, P, stretched_mesh(0.0, 1.001 * ytop, 40, 4.0));
  EXPECT_LE(grid.op.truncation_residual(grid.c1, grid.c2), 1e-9);
  EXPECT_LE(grid.sweeps, 3);
  EXPECT_TRUE(grid.covers(2.0, 1.2));
  EXPECT_FALSE(grid.covers(60.0, 1.2));
  EXPECT_FALSE(grid.covers(2.0, 1.001 * ytop + 1.0));
}

TEST(Region2, ContinuousResidualHalvesWithMesh) {
  const auto field = CoefficientField::constant(0.03, std::sqrt(0.08));
  const auto P = MarketParams::make(0.03, 0.8, PayoffKind::FixedStrike);
  MeshSpec ms;
  ms.ladder_depth = 0;
  double prev = 0.0;
  for (std::size_t n : {40, 80}) {
    const auto fam = build_family(stretched_mesh(1.0, 50.0, n, 4.0), P.kind, field, P, ms);
    double ytop = 0.0;
    for (const auto& sl : fam.slices())
      for (const auto& c : sl.crossings) ytop = std::max(ytop, c.y);
    const auto grid = solve_region2(fam, P.kind, field, P, stretched_mesh(0.0, 1.001 * ytop, n, 4.0));
    const double r = std::max(grid.residual_norms.s_eq, grid.residual_norms.y_eq);
    if (prev > 0.0) EXPECT_GE(prev / r, 1.7);
    prev = r;
  }
}
