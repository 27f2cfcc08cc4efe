#include "mdd/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "mdd/closedform.hpp"
#include "mdd/errors.hpp"
#include "mdd/mc.hpp"

namespace mdd {

namespace {

constexpr double kRelStep = 1e-5;

GeneratorTerms combine(double delta, double sigma, double rho, double x, double v, double vx, double vxx) {
  const double t1 = (rho - delta) * x * vx;
  const double t2 = 0.5 * sigma * sigma * x * x * vxx;
  const double t3 = rho * v;
  return {t1 + t2 - t3, std::max({std::abs(t1), std::abs(t2), std::abs(t3)})};
}

void check_planes(double x, double s, double y, double h) {
  if (x - 2.0 * h < s - y || x + 2.0 * h > s)
    fail(ErrorCode::TooCloseToKink, "point within two difference steps of d1 or d2");
}

}  // namespace

double value_scale(const MarketParams& params, double x) {
  return params.kind == PayoffKind::FixedStrike ? params.K : params.K * x;
}

GeneratorTerms generator_residual(const ValueFn& v, const CoefficientField& field, double rho, double x, double s,
                                  double y) {
  State::make(x, s, y);
  const double h = kRelStep * x;
  check_planes(x, s, y, h);
  const auto cv = field.eval(s, y);
  const double v0 = v(x, s, y), vp = v(x + h, s, y), vm = v(x - h, s, y);
  return combine(cv.delta, cv.sigma, rho, x, v0, (vp - vm) / (2.0 * h), (vp - 2.0 * v0 + vm) / (h * h));
}

GeneratorTerms generator_residual(const PiecewiseValue& pv, double x, double s, double y, Derivatives mode) {
  const auto r = pv.evaluate(x, s, y);
  const auto cv = pv.field().eval(s, y);
  const double rho = pv.params().rho;
  if (mode == Derivatives::Analytic && r.branch == Branch::Region1) {
    const auto c = pv.region1_coeffs_at(s, y, r.b);
    return combine(cv.delta, cv.sigma, rho, x, c.value(x), c.dx(x), c.dxx(x));
  }
  if (mode == Derivatives::Analytic && r.branch == Branch::Stop) {
    // The payoff is affine in x where it is positive.
    return combine(cv.delta, cv.sigma, rho, x, r.value, payoff_dx(pv.params().kind, pv.params().K, x, s, y), 0.0);
  }
  const double h = kRelStep * x;
  if (std::isfinite(r.b) && std::abs(x - r.b) < 2.0 * h)
    fail(ErrorCode::TooCloseToKink, "point within two difference steps of the boundary");
  return generator_residual([&pv](double xx, double ss, double yy) { return value_full(xx, ss, yy, pv); },
                            pv.field(), rho, x, s, y);
}

double smooth_fit_residual(const PiecewiseValue& pv, double s, double y, std::optional<double> b_probe,
                           Derivatives mode) {
  const double b_star = pv.boundary().b_at(s, y);
  if (!(b_star > s - y && b_star < s)) fail(ErrorCode::NotApplicable, "smooth fit applies only where s-y < b < s");
  const double b = b_probe.value_or(b_star);
  if (!(b > s - y)) fail(ErrorCode::InvalidParams, "probe boundary must exceed s-y");
  const auto c = pv.region1_coeffs_at(s, y, b_star);
  double slope;
  if (mode == Derivatives::Analytic) {
    slope = c.dx(b);
  } else {
    const double h = kRelStep * b;
    slope = (3.0 * c.value(b) - 4.0 * c.value(b - h) + c.value(b - 2.0 * h)) / (2.0 * h);
  }
  return slope - payoff_dx(pv.params().kind, pv.params().K, b, s, y);
}

double normal_reflection_residual(const PiecewiseValue& pv, double s, double y, Plane which) {
  if (which == Plane::D2) {
    const double u = s - y;
    // One-sided fourth-order stencil kept inside the continuation layer u < b.
    const auto r0 = pv.evaluate(u, s, y);
    if (r0.branch == Branch::Stop) fail(ErrorCode::NotApplicable, "d2 lies in the stopping region");
    const double h = std::min(1e-4 * u, (r0.b - u) / 8.0);
    if (!(h >= 1e-5 * u)) fail(ErrorCode::TooCloseToKink, "exercise boundary too close to d2 for a y-difference");
    double v[5] = {r0.value, 0, 0, 0, 0};
    for (int k = 1; k < 5; ++k) {
      const auto r = pv.evaluate(u, s, y + k * h);
      if (r.branch != r0.branch) fail(ErrorCode::TooCloseToKink, "y-difference crosses a branch");
      v[k] = r.value;
    }
    return (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
  }
  const auto r0 = pv.evaluate(s, s, y);
  if (r0.branch == Branch::Stop) fail(ErrorCode::NotApplicable, "d1 lies in the stopping region");
  const double h = kRelStep * s;
  const double v1 = value_full(s, s + h, y, pv), v2 = value_full(s, s + 2.0 * h, y, pv);
  return (-3.0 * r0.value + 4.0 * v1 - v2) / (2.0 * h);
}

ResidualNorms grid_reflection_residual(const Region2Grid& grid) {
  const auto& op = grid.op;
  const auto& geo = op.geometry;
  ResidualNorms out;
  for (const auto& eq : op.equations) {
    const double scale = eq.s / std::max(1.0, std::abs(grid.node_value(eq.i, eq.j, eq.s)));
    if (eq.top != TopKind::Truncation) {
      const double xm = eq.s + 0.5 * eq.top_h;
      const double upper = eq.top == TopKind::Node ? grid.node_value(eq.i + 1, eq.j, xm) : eq.top_data;
      const double r = std::abs(upper - grid.node_value(eq.i, eq.j, xm)) / eq.top_h * scale;
      out.s_eq = std::max(out.s_eq, r);
    }
    const double yu = eq.bottom == BottomKind::Node ? geo.y_mesh[eq.j + 1] : geo.curve_pos[geo.idx(eq.i, eq.j)];
    const double upper = eq.bottom == BottomKind::Node ? grid.node_value(eq.i, eq.j + 1, eq.xb) : eq.bot_data;
    const double r = std::abs(upper - grid.node_value(eq.i, eq.j, eq.xb)) / (yu - geo.y_mesh[eq.j]) * scale;
    out.y_eq = std::max(out.y_eq, r);
  }
  return out;
}

std::vector<State> sample_states(const SampleBox& box, std::size_t n, std::uint64_t seed) {
  std::vector<State> out;
  out.reserve(n);
  PathRng rng(seed, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = box.s_lo + (box.s_hi - box.s_lo) * (1.0 - rng.uniform_open());
    const double y = s * (1.0 - rng.uniform_open());
    const double x = s - y + y * (1.0 - rng.uniform_open());
    out.push_back({std::min(std::max(x, s - y), s), s, y});
  }
  return out;
}

VariationalReport variational_check(const PiecewiseValue& pv, const std::vector<State>& states, double tol) {
  VariationalReport rep;
  const auto& p = pv.params();
  bool first = true;
  for (const auto& st : states) {
    ValueResult r;
    try {
      r = pv.evaluate(st.x, st.s, st.y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutsideSolvedRange) throw;
      ++rep.skipped;
      continue;
    }
    ++rep.samples;
    const double g = payoff(p.kind, p.K, st.x, st.s, st.y);
    const double scale = value_scale(p, st.x);
    const double gap = (r.value - g) / scale;
    if (r.branch == Branch::Stop) {
      if (r.value != g) ++rep.stop_not_equal;
      continue;
    }
    rep.worst_gap = first ? gap : std::min(rep.worst_gap, gap);
    first = false;
    if (gap < -tol) ++rep.below_payoff;
    // Strict inequality is only resolvable away from the boundary, where V - G vanishes quadratically.
    else if (gap <= 0.0 && (!std::isfinite(r.b) || r.b - st.x > 1e-4 * r.b)) ++rep.not_strict;
  }
  return rep;
}

}  // namespace mdd
