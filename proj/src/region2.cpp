#include "mdd/region2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "mdd/closedform.hpp"
#include "mdd/errors.hpp"

namespace mdd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double rep(double c1, double c2, double g1, double g2, double x) {
  return c1 * std::pow(x, g1) + c2 * std::pow(x, g2);
}

// The s-equation is collocated at the midpoint toward the s-side data point.
double top_x(const NodeEquation& eq) { return eq.s + 0.5 * eq.top_h; }

double top_lhs(double c1, double c2, const NodeEquation& eq) { return rep(c1, c2, eq.g1, eq.g2, top_x(eq)); }

}  // namespace

std::vector<double> stretched_mesh(double lo, double hi, std::size_t n, double stretch) {
  if (n < 1 || !(hi > lo)) fail(ErrorCode::InvalidParams, "bad mesh bounds");
  std::vector<double> m(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    m[k] = stretch == 0.0 ? lo + (hi - lo) * t : lo + (hi - lo) * std::expm1(stretch * t) / std::expm1(stretch);
  }
  m.back() = hi;
  return m;
}

DiscreteOperator assemble_system(const CoefficientField& field, double rho, Region2Geometry geo) {
  const std::size_t ns = geo.ns(), ny = geo.ny();
  if (geo.mask.size() != ns * ny) fail(ErrorCode::InvalidParams, "mask size mismatch");
  if (std::none_of(geo.mask.begin(), geo.mask.end(), [](std::uint8_t m) { return m != 0; }))
    fail(ErrorCode::EmptyRegion, "no cell with b > s");
  DiscreteOperator op;
  op.g1.assign(ns * ny, kNaN);
  op.g2 = op.dgs1 = op.dgs2 = op.dgy1 = op.dgy2 = op.g1;
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      if (!geo.masked(i, j)) continue;
      const auto e = exponents_at(field, geo.s_mesh[i], geo.y_mesh[j], rho);
      const std::size_t k = geo.idx(i, j);
      op.g1[k] = e.gamma1;
      op.g2[k] = e.gamma2;
      op.dgs1[k] = e.d_gamma_s[0];
      op.dgs2[k] = e.d_gamma_s[1];
      op.dgy1[k] = e.d_gamma_y[0];
      op.dgy2[k] = e.d_gamma_y[1];
    }
  for (std::size_t ii = ns; ii-- > 0;)
    for (std::size_t jj = ny; jj-- > 0;) {
      if (!geo.masked(ii, jj)) continue;
      NodeEquation eq{};
      eq.i = ii;
      eq.j = jj;
      eq.s = geo.s_mesh[ii];
      eq.u = eq.s - geo.y_mesh[jj];
      const std::size_t k = geo.idx(ii, jj);
      eq.g1 = op.g1[k];
      eq.g2 = op.g2[k];
      eq.top_data = eq.bot_data = kNaN;
      eq.top_g1 = eq.top_g2 = eq.bot_g1 = eq.bot_g2 = kNaN;
      eq.top_h = 0.0;
      if (ii + 1 == ns) {
        eq.top = TopKind::Truncation;
      } else if (geo.masked(ii + 1, jj)) {
        eq.top = TopKind::Node;
        eq.top_g1 = op.g1[geo.idx(ii + 1, jj)];
        eq.top_g2 = op.g2[geo.idx(ii + 1, jj)];
        eq.top_h = geo.s_mesh[ii + 1] - eq.s;
      } else {
        eq.top = TopKind::SbarData;
        const double q = geo.sbar_pos[k];
        eq.top_data = geo.sbar_value(ii, jj, 0.5 * (eq.s + q));
        eq.top_h = q - eq.s;
      }
      if (jj + 1 < ny && geo.masked(ii, jj + 1)) {
        eq.bottom = BottomKind::Node;
        eq.bot_g1 = op.g1[geo.idx(ii, jj + 1)];
        eq.bot_g2 = op.g2[geo.idx(ii, jj + 1)];
        eq.xb = eq.s - 0.5 * (geo.y_mesh[jj] + geo.y_mesh[jj + 1]);
      } else {
        eq.bottom = BottomKind::CurveData;
        eq.xb = eq.s - 0.5 * (geo.y_mesh[jj] + geo.curve_pos[k]);
        eq.bot_data = geo.curve_value(ii, jj, eq.xb);
      }
      op.equations.push_back(eq);
    }
  op.geometry = std::move(geo);
  return op;
}

double DiscreteOperator::truncation_residual(const std::vector<double>& c1, const std::vector<double>& c2) const {
  const auto& geo = geometry;
  double worst = 0.0;
  for (const auto& eq : equations) {
    const std::size_t k = geo.idx(eq.i, eq.j);
    if (eq.top == TopKind::Node) {
      const std::size_t n = geo.idx(eq.i + 1, eq.j);
      const double r = top_lhs(c1[k], c2[k], eq) - rep(c1[n], c2[n], eq.top_g1, eq.top_g2, top_x(eq));
      worst = std::max(worst, std::abs(r) / eq.top_h);
    }
    if (eq.bottom == BottomKind::Node) {
      const std::size_t n = geo.idx(eq.i, eq.j + 1);
      const double r = rep(c1[k], c2[k], eq.g1, eq.g2, eq.xb) - rep(c1[n], c2[n], eq.bot_g1, eq.bot_g2, eq.xb);
      worst = std::max(worst, std::abs(r) / (geo.y_mesh[eq.j + 1] - geo.y_mesh[eq.j]));
    }
  }
  return worst;
}

Region2Grid solve_system(DiscreteOperator op, const Region2Options& opts) {
  Region2Grid g;
  const auto& geo = op.geometry;
  g.c1.assign(geo.ns() * geo.ny(), 0.0);
  g.c2 = g.c1;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double change = 0.0;
    for (const auto& eq : op.equations) {
      const std::size_t k = geo.idx(eq.i, eq.j);
      double B = eq.bot_data;
      if (eq.bottom == BottomKind::Node) {
        const std::size_t n = geo.idx(eq.i, eq.j + 1);
        B = rep(g.c1[n], g.c2[n], eq.bot_g1, eq.bot_g2, eq.xb);
      }
      double c1, c2;
      if (eq.top == TopKind::Truncation) {
        c1 = 0.0;
        c2 = B / std::pow(eq.xb, eq.g2);
      } else {
        double T = eq.top_data;
        if (eq.top == TopKind::Node) {
          const std::size_t n = geo.idx(eq.i + 1, eq.j);
          T = rep(g.c1[n], g.c2[n], eq.top_g1, eq.top_g2, top_x(eq));
        }
        // Unknowns D_k = C_k s^{g_k}: D1 a1 + D2 a2 = T, D1 r1 + D2 r2 = B,
        // a_k = (x_m/s)^{g_k} at the s-midpoint x_m, r_k = (x_b/s)^{g_k}.
        const double lr = std::log(eq.xb / eq.s);
        const double r1 = std::exp(eq.g1 * lr), r2 = std::exp(eq.g2 * lr);
        const double lm = std::log1p(0.5 * eq.top_h / eq.s);
        const double a1 = std::exp(eq.g1 * lm), a2 = std::exp(eq.g2 * lm);
        const double det = a1 * r2 - a2 * r1;
        const double d1 = (T * r2 - a2 * B) / det;
        const double d2 = (a1 * B - r1 * T) / det;
        c1 = d1 * std::pow(eq.s, -eq.g1);
        c2 = d2 * std::pow(eq.s, -eq.g2);
      }
      const double scale = std::max(1.0, std::abs(B));
      change = std::max(change, std::abs(rep(c1 - g.c1[k], c2 - g.c2[k], eq.g1, eq.g2, eq.u)) / scale);
      change = std::max(change, std::abs(rep(c1 - g.c1[k], c2 - g.c2[k], eq.g1, eq.g2, eq.s)) / scale);
      g.c1[k] = c1;
      g.c2[k] = c2;
    }
    g.history.push_back(change);
    g.sweeps = sweep + 1;
    if (sweep > 0 && change <= opts.tol) break;
  }
  if (g.history.size() < 2 || g.history.back() > opts.tol)
    fail(ErrorCode::NonConvergence, "region-2 sweeps did not converge, last update " +
                                        std::to_string(g.history.empty() ? 0.0 : g.history.back()));

  // Discrete residuals of the solved equations.
  for (const auto& eq : op.equations) {
    const std::size_t k = geo.idx(eq.i, eq.j);
    double T = eq.top_data, B = eq.bot_data;
    if (eq.top == TopKind::Node) {
      const std::size_t n = geo.idx(eq.i + 1, eq.j);
      T = rep(g.c1[n], g.c2[n], eq.top_g1, eq.top_g2, top_x(eq));
    }
    if (eq.bottom == BottomKind::Node) {
      const std::size_t n = geo.idx(eq.i, eq.j + 1);
      B = rep(g.c1[n], g.c2[n], eq.bot_g1, eq.bot_g2, eq.xb);
    }
    const double rs = eq.top == TopKind::Truncation
                          ? std::abs(g.c1[k])
                          : std::abs(top_lhs(g.c1[k], g.c2[k], eq) - T) / std::max(1.0, std::abs(T));
    const double ry = std::abs(rep(g.c1[k], g.c2[k], eq.g1, eq.g2, eq.xb) - B) / std::max(1.0, std::abs(B));
    g.discrete_residuals.s_eq = std::max(g.discrete_residuals.s_eq, rs);
    g.discrete_residuals.y_eq = std::max(g.discrete_residuals.y_eq, ry);
  }

  // Continuous-form residuals by central differences, two cells clear of data curves, on
  // s <= s_max/2 (the far-field closure leaves a boundary layer of width ~y at s_max).
  const std::size_t ns = geo.ns(), ny = geo.ny();
  const double s_cut = 0.5 * geo.s_mesh.back();
  for (std::size_t i = 2; i + 2 < ns && geo.s_mesh[i] <= s_cut; ++i)
    for (std::size_t j = 2; j + 2 < ny; ++j) {
      bool ok = true;
      for (int d = -2; d <= 2 && ok; ++d) {
        ok = geo.masked(i + d, j) && geo.masked(i, j + d);
      }
      if (!ok) continue;
      const std::size_t k = geo.idx(i, j);
      const double s = geo.s_mesh[i], u = s - geo.y_mesh[j];
      const double v = std::max(1.0, std::abs(rep(g.c1[k], g.c2[k], op.g1[k], op.g2[k], s)));
      const std::size_t ip = geo.idx(i + 1, j), im = geo.idx(i - 1, j);
      const std::size_t jp = geo.idx(i, j + 1), jm = geo.idx(i, j - 1);
      const double hs = geo.s_mesh[i + 1] - geo.s_mesh[i - 1];
      const double hy = geo.y_mesh[j + 1] - geo.y_mesh[j - 1];
      const double ls = std::log(s), lu = std::log(u);
      const double rs = ((g.c1[ip] - g.c1[im]) / hs + g.c1[k] * op.dgs1[k] * ls) * std::pow(s, op.g1[k]) +
                        ((g.c2[ip] - g.c2[im]) / hs + g.c2[k] * op.dgs2[k] * ls) * std::pow(s, op.g2[k]);
      const double ry = ((g.c1[jp] - g.c1[jm]) / hy + g.c1[k] * op.dgy1[k] * lu) * std::pow(u, op.g1[k]) +
                        ((g.c2[jp] - g.c2[jm]) / hy + g.c2[k] * op.dgy2[k] * lu) * std::pow(u, op.g2[k]);
      g.residual_norms.s_eq = std::max(g.residual_norms.s_eq, std::abs(rs) * s / v);
      g.residual_norms.y_eq = std::max(g.residual_norms.y_eq, std::abs(ry) * s / v);
    }
  g.op = std::move(op);
  return g;
}

double Region2Grid::node_value(std::size_t i, std::size_t j, double x) const {
  const std::size_t k = op.geometry.idx(i, j);
  return rep(c1[k], c2[k], op.g1[k], op.g2[k], x);
}

namespace {

struct ColumnHit {
  bool ok;
  double v;
};

}  // namespace

bool Region2Grid::covers(double s, double y) const {
  const auto& geo = op.geometry;
  return s >= geo.s_mesh.front() && s <= geo.s_mesh.back() && y >= 0.0 && y <= geo.y_mesh.back() && y < s;
}

double Region2Grid::value(double x, double s, double y) const {
  const auto& geo = op.geometry;
  if (!covers(s, y)) fail(ErrorCode::OutsideSolvedRange, "point outside the region-2 grid");
  const auto& sm = geo.s_mesh;
  const auto& ym = geo.y_mesh;
  std::size_t i = static_cast<std::size_t>(std::upper_bound(sm.begin(), sm.end(), s) - sm.begin());
  i = i == 0 ? 0 : i - 1;
  if (i + 1 >= sm.size()) i = sm.size() - 1;
  std::size_t j = static_cast<std::size_t>(std::upper_bound(ym.begin(), ym.end(), y) - ym.begin());
  j = j == 0 ? 0 : j - 1;
  if (j + 1 >= ym.size()) j = ym.size() - 1;

  // Value in column c at level y, falling back to the crossing-curve data above the last masked node.
  auto column = [&](std::size_t c) -> ColumnHit {
    const bool m0 = geo.masked(c, j);
    const bool m1 = j + 1 < ym.size() && geo.masked(c, j + 1);
    if (m0 && m1) {
      const double w = (y - ym[j]) / (ym[j + 1] - ym[j]);
      return {true, (1.0 - w) * node_value(c, j, x) + w * node_value(c, j + 1, x)};
    }
    if (m0) {
      const double yc = geo.curve_pos[geo.idx(c, j)];
      const double v0 = node_value(c, j, x);
      if (!std::isfinite(yc) || yc <= ym[j]) return {true, v0};
      const double w = std::clamp((y - ym[j]) / (yc - ym[j]), 0.0, 1.0);
      return {true, (1.0 - w) * v0 + w * geo.curve_value(c, j, x)};
    }
    if (m1) return {true, node_value(c, j + 1, x)};
    return {false, 0.0};
  };

  const ColumnHit a = column(i);
  if (i + 1 < sm.size() && s > sm[i]) {
    const ColumnHit b = column(i + 1);
    const double w = (s - sm[i]) / (sm[i + 1] - sm[i]);
    if (a.ok && b.ok) return (1.0 - w) * a.v + w * b.v;
    if (a.ok) {
      const double q = geo.sbar_pos[geo.idx(i, j)];
      if (geo.masked(i, j) && std::isfinite(q) && q > sm[i]) {
        const double wq = std::clamp((s - sm[i]) / (q - sm[i]), 0.0, 1.0);
        return (1.0 - wq) * a.v + wq * geo.sbar_value(i, j, x);
      }
      return a.v;
    }
    if (b.ok) return b.v;
  } else if (a.ok) {
    return a.v;
  }
  fail(ErrorCode::OutsideSolvedRange, "no region-2 node near the point");
}

Region2Geometry region2_geometry(const BoundaryFamily& family, PayoffKind kind, const CoefficientField& field,
                                 const MarketParams& params, const std::vector<double>& y_mesh) {
  Region2Geometry geo;
  geo.s_mesh = family.s_mesh();
  geo.y_mesh = y_mesh;
  if (y_mesh.size() < 2 || y_mesh.front() != 0.0) fail(ErrorCode::InvalidParams, "y mesh must start at 0");
  const std::size_t ns = geo.ns(), ny = geo.ny();
  geo.mask.assign(ns * ny, 0);
  geo.sbar_pos.assign(ns * ny, kNaN);
  geo.curve_pos.assign(ns * ny, kNaN);
  std::vector<double> excess(ns * ny, kNaN);  // b - s
  for (std::size_t i = 0; i < ns; ++i) {
    const auto& sl = family.slice(i);
    for (std::size_t j = 1; j < ny; ++j) {
      const double y = y_mesh[j];
      if (y >= geo.s_mesh[i]) break;
      if (y < sl.y_end() && !sl.infinite_below) continue;
      const double b = sl.b_at(y);
      excess[geo.idx(i, j)] = std::isinf(b) ? 1e300 : b - geo.s_mesh[i];
      if (b > geo.s_mesh[i]) geo.mask[geo.idx(i, j)] = 1;
    }
  }
  auto curve = std::make_shared<std::vector<ValueCoefficients>>(ns * ny);
  auto sbar = std::make_shared<std::vector<ValueCoefficients>>(ns * ny);
  for (std::size_t i = 0; i < ns; ++i) {
    const auto& sl = family.slice(i);
    const double s = geo.s_mesh[i];
    for (std::size_t j = 1; j < ny; ++j) {
      const std::size_t k = geo.idx(i, j);
      if (!geo.mask[k]) continue;
      const double y = y_mesh[j];
      if (!(j + 1 < ny && geo.mask[geo.idx(i, j + 1)])) {
        double yc = std::numeric_limits<double>::infinity();
        for (const auto& c : sl.crossings)
          if (c.kind == CrossingKind::Exit && c.y > y) yc = std::min(yc, c.y);
        if (!std::isfinite(yc))
          fail(ErrorCode::OutsideSolvedRange, "no crossing curve above region-2 node at s=" + std::to_string(s));
        const auto e = exponents_at(field, s, yc, params.rho);
        geo.curve_pos[k] = yc;
        (*curve)[k] = region1_coeffs(kind, s, yc, s, e.gamma1, e.gamma2, params.K);
      }
      if (i + 1 < ns && !geo.mask[geo.idx(i + 1, j)]) {
        const double f0 = excess[k], f1 = excess[geo.idx(i + 1, j)];
        if (!std::isfinite(f1)) fail(ErrorCode::OutsideSolvedRange, "boundary unknown next to region-2 node");
        const double q = s + (geo.s_mesh[i + 1] - s) * f0 / (f0 - f1);
        const auto e = exponents_at(field, q, y, params.rho);
        geo.sbar_pos[k] = q;
        (*sbar)[k] = region1_coeffs(kind, q, y, q, e.gamma1, e.gamma2, params.K);
      }
    }
  }
  const std::size_t nyc = ny;
  geo.curve_value = [curve, nyc](std::size_t i, std::size_t j, double x) { return (*curve)[i * nyc + j].value(x); };
  geo.sbar_value = [sbar, nyc](std::size_t i, std::size_t j, double x) { return (*sbar)[i * nyc + j].value(x); };
  return geo;
}

Region2Grid solve_region2(const BoundaryFamily& family, PayoffKind kind, const CoefficientField& field,
                          const MarketParams& params, const std::vector<double>& y_mesh, const Region2Options& opts) {
  return solve_system(assemble_system(field, params.rho, region2_geometry(family, kind, field, params, y_mesh)),
                      opts);
}

}  // namespace mdd
