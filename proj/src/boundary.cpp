#include "mdd/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdd/errors.hpp"
#include "mdd/gstar.hpp"
#include "mdd/parallel.hpp"

namespace mdd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLadderOrderTol = 1e-6;
constexpr double kMaxRelChange = 0.01;

// r^{gi} / (r^{gi} - r^{gj}) with lr = ln r.
double q_ratio(double gi, double gj, double lr) { return -1.0 / std::expm1((gj - gi) * lr); }

double fixed_kernel(double u, double b, double g1, double g2, double dy1, double dy2, double K) {
  if (!(b != u) || !(K - u != 0.0) || !(b > 0.0) || !(u > 0.0))
    fail(ErrorCode::SingularRHS, "fixed-strike RHS singular");
  const double lr = std::log(u / b);
  if (lr == 0.0) fail(ErrorCode::SingularRHS, "b equals s-y to round-off");
  const double inv = 1.0 / (K - u);
  double sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double gi = i == 0 ? g1 : g2, gj = i == 0 ? g2 : g1, di = i == 0 ? dy1 : dy2;
    const double qi = q_ratio(gi, gj, lr);
    sum += (b / gi) * (qi * (inv + di * lr) + di / (gj - gi));
  }
  return sum;
}

double float_kernel(double u, double b, double g1, double g2, double dy1, double dy2, double K) {
  if (!(b > 0.0) || !(u > 0.0)) fail(ErrorCode::SingularRHS, "floating-strike RHS singular");
  const double den = (g1 - 1.0) * (g2 - 1.0) * K * b - g1 * g2 * u;
  const double lr = std::log(u / b);
  if (den == 0.0 || lr == 0.0) fail(ErrorCode::SingularRHS, "floating-strike RHS singular");
  double sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double gi = i == 0 ? g1 : g2, gj = i == 0 ? g2 : g1, di = i == 0 ? dy1 : dy2;
    const double qi = q_ratio(gi, gj, lr);
    sum += gj * b / den * qi;
    if (di != 0.0) sum += b * ((gj - 1.0) * K * b - gj * u) / den * di * (1.0 / (gj - gi) + qi * lr);
  }
  return sum;
}

// d b / d u along one slice (u = s - y increasing).
struct SliceRhs {
  PayoffKind kind;
  const CoefficientField* field;
  double rho, K, s;
  bool y_dep;
  double g1 = 0, g2 = 0;

  SliceRhs(PayoffKind k, const CoefficientField& f, double r, double strike, double s_)
      : kind(k), field(&f), rho(r), K(strike), s(s_), y_dep(f.depends_on_y()) {
    if (!y_dep) {
      const auto cv = f.eval(s, 0.5 * s);
      const auto g = gamma_exponents(cv.delta, cv.sigma, rho);
      g1 = g.gamma1;
      g2 = g.gamma2;
    }
  }

  double dy(double u, double b) const {
    if (!y_dep) {
      return kind == PayoffKind::FixedStrike ? fixed_kernel(u, b, g1, g2, 0.0, 0.0, K)
                                             : float_kernel(u, b, g1, g2, 0.0, 0.0, K);
    }
    const auto e = exponents_at(*field, s, s - u, rho);
    return kind == PayoffKind::FixedStrike
               ? fixed_kernel(u, b, e.gamma1, e.gamma2, e.d_gamma_y[0], e.d_gamma_y[1], K)
               : float_kernel(u, b, e.gamma1, e.gamma2, e.d_gamma_y[0], e.d_gamma_y[1], K);
  }
  double du(double u, double b) const { return -dy(u, b); }
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepOut {
  double b, k7, err;
};

StepOut dp_step(const SliceRhs& f, double u, double b, double k1, double h) {
  const double k2 = f.du(u + c2 * h, b + h * a21 * k1);
  const double k3 = f.du(u + c3 * h, b + h * (a31 * k1 + a32 * k2));
  const double k4 = f.du(u + c4 * h, b + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const double k5 = f.du(u + c5 * h, b + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const double k6 = f.du(u + h, b + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  const double bn = b + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const double k7 = f.du(u + h, bn);
  const double err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  return {bn, k7, err};
}

void check_lemma(const SliceRhs& f, double u, double b) {
  const double tol = 1e-12;
  bool ok;
  if (f.kind == PayoffKind::FixedStrike) {
    ok = u < f.K ? b > u : b > f.s;
  } else {
    const double lb = std::max({lower_bound_b(*f.field, f.rho, f.K, f.s, f.s - u), u, u / f.K});
    ok = b >= lb * (1.0 - tol);
  }
  if (!ok || !std::isfinite(b))
    fail(ErrorCode::ConstraintViolation, "boundary leaves the admissible set at s=" + std::to_string(f.s) +
                                             " y=" + std::to_string(f.s - u) + " b=" + std::to_string(b));
}

}  // namespace

double lower_bound_b(const CoefficientField& field, double rho, double K, double s, double y) {
  const auto cv = field.eval(s, y);
  return rho * (s - y) / (cv.delta * K);
}

double rhs_fixed_beta(double s, double y, double b, double beta1, double beta2, double K) {
  return fixed_kernel(s - y, b, beta1, beta2, 0.0, 0.0, K);
}

double rhs_fixed_general(const CoefficientField& field, double s, double y, double b, double rho, double K) {
  const auto e = exponents_at(field, s, y, rho);
  return fixed_kernel(s - y, b, e.gamma1, e.gamma2, e.d_gamma_y[0], e.d_gamma_y[1], K);
}

double rhs_float_beta(double s, double y, double b, double beta1, double beta2, double K) {
  return float_kernel(s - y, b, beta1, beta2, 0.0, 0.0, K);
}

double rhs_float_general(const CoefficientField& field, double s, double y, double b, double rho, double K) {
  const auto e = exponents_at(field, s, y, rho);
  return float_kernel(s - y, b, e.gamma1, e.gamma2, e.d_gamma_y[0], e.d_gamma_y[1], K);
}

double base_start_slope(double s, PayoffKind kind, const CoefficientField& field, const MarketParams& params,
                        const MeshSpec& mesh) {
  const double u0 = s * mesh.eps_start;
  const auto cv = field.eval(s, s - u0);
  const auto g = gamma_exponents(cv.delta, cv.sigma, params.rho);
  if (kind == PayoffKind::FixedStrike) {
    solve_gstar_fixed(g.gamma1, g.gamma2);
    // Leading-order corner balance: b/(s-y) = 1 + (s-y)/(K |gamma1 gamma2|).
    return 1.0 + u0 / (params.K * std::abs(g.gamma1 * g.gamma2));
  }
  return solve_gstar_floating(g.gamma1, g.gamma2, params.K).g_star;
}

BoundarySlice integrate_slice(double s, PayoffKind kind, const CoefficientField& field,
                              const MarketParams& params, const MeshSpec& mesh, double eta) {
  if (!(s > 0.0)) fail(ErrorCode::InvalidParams, "s must be positive");
  if (!(mesh.eps_start > 0.0 && mesh.eps_start < 1.0)) fail(ErrorCode::InvalidParams, "eps_start in (0,1)");
  if (!(mesh.y_min >= 0.0 && mesh.y_min < s * (1.0 - mesh.eps_start)))
    fail(ErrorCode::InvalidParams, "y_min must lie in [0, y0)");
  const SliceRhs f(kind, field, params.rho, params.K, s);

  BoundarySlice out;
  out.s = s;
  out.kind = kind;
  out.K = params.K;
  out.rho = params.rho;
  out.eta = eta;
  out.g_start = base_start_slope(s, kind, field, params, mesh) * (1.0 + eta);

  double u = s * mesh.eps_start;
  double b = out.g_start * u;
  const double u_end = s - mesh.y_min;
  double u_lim = u_end;
  if (kind == PayoffKind::FixedStrike && params.K < u_lim) u_lim = params.K * (1.0 - 1e-12);
  const double b_cap = mesh.b_cap_factor * s;

  check_lemma(f, u, b);
  double k1 = f.du(u, b);
  out.y_grid.push_back(s - u);
  out.b_values.push_back(b);
  out.slopes.push_back(-k1);

  double h = 1e-3 * u;
  double err_prev = 1e-4;
  std::size_t steps = 0;
  while (u < u_lim) {
    if (b > b_cap) {
      out.infinite_below = true;
      break;
    }
    if (++steps > static_cast<std::size_t>(mesh.max_steps)) fail(ErrorCode::StepFailure, "step budget exhausted");
    bool last = false;
    if (u + h >= u_lim) {
      h = u_lim - u;
      last = true;
    }
    if (h < 1e-15 * std::max(u, 1e-300) * 4.0 || h <= 0.0)
      fail(ErrorCode::StepFailure, "step size underflow at y=" + std::to_string(s - u));
    StepOut st;
    double err = 0.0;
    bool ok = true;
    try {
      st = dp_step(f, u, b, k1, h);
      const double sc = mesh.atol + mesh.rtol * std::max(std::abs(b), std::abs(st.b));
      err = std::abs(st.err) / sc;
      if (!std::isfinite(err) || !std::isfinite(st.b)) ok = false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularRHS) throw;
      ok = false;
    }
    if (!ok || err > 1.0) {
      const double fac = ok ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      h *= fac;
      continue;
    }
    const double u_new = last ? u_lim : u + h;
    // Crossing of b = s inside the step, located by re-stepping from the left node.
    const bool was_above = b > s, is_above = st.b > s;
    if (was_above != is_above) {
      double lo = 0.0, hi = h;
      while (hi - lo > 1e-15 * s) {
        const double mid = 0.5 * (lo + hi);
        const double bm = dp_step(f, u, b, k1, mid).b;
        if ((bm > s) == was_above) lo = mid; else hi = mid;
      }
      if (static_cast<int>(out.crossings.size()) >= mesh.max_crossings)
        fail(ErrorCode::TooManyCrossings, "more than " + std::to_string(mesh.max_crossings) + " crossings");
      out.crossings.push_back({s - (u + 0.5 * (lo + hi)), is_above ? CrossingKind::Exit : CrossingKind::Reentry});
    }
    u = u_new;
    b = st.b;
    k1 = st.k7;
    check_lemma(f, u, b);
    out.y_grid.push_back(s - u);
    out.b_values.push_back(b);
    out.slopes.push_back(-k1);
    const double e = std::max(err, 1e-10);
    h *= std::clamp(0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0), 0.2, 5.0);
    // Keep the Hermite dense output accurate where b grows fast.
    if (k1 != 0.0) h = std::min(h, kMaxRelChange * std::abs(b / k1));
    err_prev = e;
  }
  if (kind == PayoffKind::FixedStrike && u >= u_lim && u_lim < u_end) {
    if (!(b > s)) fail(ErrorCode::ConstraintViolation, "b <= s as s-y reaches K");
    out.infinite_below = true;
  }
  out.steps = steps;
  for (const auto& c : out.crossings) {
    if (c.kind != CrossingKind::Exit) continue;
    if (kind == PayoffKind::FloatingStrike || s - c.y <= params.K) ++out.l_tilde_prime;
  }
  return out;
}

double BoundarySlice::b_at(double y) const {
  if (y >= y_grid.front()) return g_start * (s - y);
  if (y < y_grid.back()) {
    if (infinite_below) return kInf;
    fail(ErrorCode::OutsideSolvedRange, "y below integrated range");
  }
  // y_grid descending: find k with y_grid[k] >= y > y_grid[k+1].
  auto it = std::lower_bound(y_grid.begin(), y_grid.end(), y, [](double a, double v) { return a > v; });
  std::size_t k1 = static_cast<std::size_t>(it - y_grid.begin());
  if (k1 == 0) return b_values.front();
  if (k1 >= y_grid.size()) return b_values.back();
  const std::size_t k0 = k1 - 1;
  if (y_grid[k1] == y) return b_values[k1];
  // Cubic Hermite in y.
  const double h = y_grid[k1] - y_grid[k0];
  const double t = (y - y_grid[k0]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * b_values[k0] + (t3 - 2 * t2 + t) * h * slopes[k0] +
         (-2 * t3 + 3 * t2) * b_values[k1] + (t3 - t2) * h * slopes[k1];
}

int BoundarySlice::region_index(double y) const {
  int n = 0;
  for (const auto& c : crossings)
    if (c.y > y) ++n;
  return n + 1;
}

double constraint_margin(const BoundarySlice& slice, const CoefficientField& field, double y) {
  const double b = slice.b_at(y);
  const double u = slice.s - y;
  if (slice.kind == PayoffKind::FixedStrike) return u < slice.K ? b - u : b - slice.s;
  const double lb = std::max({lower_bound_b(field, slice.rho, slice.K, slice.s, y), u, u / slice.K});
  return b - lb;
}

std::vector<LadderMember> perturbation_ladder(double s, PayoffKind kind, const CoefficientField& field,
                                              const MarketParams& params, const MeshSpec& mesh) {
  std::vector<LadderMember> out;
  for (int k = 0; k <= mesh.ladder_depth; ++k) {
    const double eta = std::ldexp(1e-2, -k);
    LadderMember m{eta, false, {}};
    try {
      m.slice = integrate_slice(s, kind, field, params, mesh, eta);
      m.admissible = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstraintViolation && e.code() != ErrorCode::StepFailure) throw;
    }
    out.push_back(std::move(m));
  }
  return out;
}

double ordering_deficit(const BoundarySlice& lo, const BoundarySlice& hi) {
  double worst = 0.0;
  for (std::size_t k = 0; k < lo.y_grid.size(); ++k) {
    const double y = lo.y_grid[k];
    if (y < hi.y_end() && !hi.infinite_below) break;
    const double bh = hi.b_at(y);
    worst = std::max(worst, (lo.b_values[k] - bh) / std::max(1.0, lo.b_values[k]));
  }
  return worst;
}

BoundarySlice select_minimal(double s, PayoffKind kind, const CoefficientField& field,
                             const MarketParams& params, const MeshSpec& mesh) {
  std::vector<LadderMember> members = perturbation_ladder(s, kind, field, params, mesh);
  BoundarySlice best;
  bool have = false;
  try {
    best = integrate_slice(s, kind, field, params, mesh, 0.0);
    have = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConstraintViolation && e.code() != ErrorCode::StepFailure) throw;
  }
  if (!have) {
    for (auto it = members.rbegin(); it != members.rend(); ++it)
      if (it->admissible) {
        best = it->slice;
        have = true;
        break;
      }
  }
  if (!have) fail(ErrorCode::NoAdmissibleSolution, "no admissible boundary at s=" + std::to_string(s));
  for (const auto& m : members)
    if (m.admissible && m.slice.eta > best.eta &&
        ordering_deficit(best, m.slice) > kLadderOrderTol)
      fail(ErrorCode::NoAdmissibleSolution,
           "perturbed solution eta=" + std::to_string(m.eta) + " crosses below the selected one");
  return best;
}

BoundaryFamily::BoundaryFamily(std::vector<double> s_mesh, std::vector<BoundarySlice> slices)
    : s_mesh_(std::move(s_mesh)), slices_(std::move(slices)) {}

bool BoundaryFamily::extrapolates(double s) const {
  return s_mesh_.empty() || s < s_mesh_.front() || s > s_mesh_.back();
}

double BoundaryFamily::b_at(double s, double y) const {
  if (slices_.empty()) fail(ErrorCode::OutsideSolvedRange, "empty boundary family");
  const double u = s - y;
  auto at = [&](std::size_t i) { return slices_[i].b_at(std::max(s_mesh_[i] - u, 0.0)); };
  if (s <= s_mesh_.front()) return at(0);
  if (s >= s_mesh_.back()) return at(s_mesh_.size() - 1);
  const std::size_t i1 = static_cast<std::size_t>(std::upper_bound(s_mesh_.begin(), s_mesh_.end(), s) - s_mesh_.begin());
  const std::size_t i0 = i1 - 1;
  if (s == s_mesh_[i0]) return slices_[i0].b_at(y);
  const double w = (s - s_mesh_[i0]) / (s_mesh_[i1] - s_mesh_[i0]);
  if (s_mesh_[i0] - u < 0.0) return at(i1);
  const double lo = at(i0), hi = at(i1);
  if (std::isinf(lo) || std::isinf(hi)) return w < 0.5 ? lo : hi;
  return (1.0 - w) * lo + w * hi;
}

int BoundaryFamily::sbar_index(std::size_t i, double y) const {
  for (std::size_t j = i + 1; j < slices_.size(); ++j) {
    if (y >= s_mesh_[j]) continue;
    double b;
    try {
      b = slices_[j].b_at(y);
    } catch (const Error&) {
      continue;
    }
    if (b <= s_mesh_[j]) return static_cast<int>(j);
  }
  return -1;
}

double BoundaryFamily::sbar(std::size_t i, double y) const {
  const int j = sbar_index(i, y);
  return j < 0 ? kInf : s_mesh_[static_cast<std::size_t>(j)];
}

BoundaryFamily build_family(const std::vector<double>& s_mesh, PayoffKind kind, const CoefficientField& field,
                            const MarketParams& params, const MeshSpec& mesh) {
  if (s_mesh.empty()) fail(ErrorCode::InvalidParams, "empty s mesh");
  for (std::size_t i = 1; i < s_mesh.size(); ++i)
    if (!(s_mesh[i] > s_mesh[i - 1])) fail(ErrorCode::InvalidParams, "s mesh must be strictly ascending");
  std::vector<BoundarySlice> slices(s_mesh.size());
  parallel_for(s_mesh.size(), [&](std::size_t i) {
    MeshSpec m = mesh;
    m.y_min = std::min(mesh.y_min, 0.5 * s_mesh[i]);
    slices[i] = select_minimal(s_mesh[i], kind, field, params, m);
  });
  return BoundaryFamily(s_mesh, std::move(slices));
}

}  // namespace mdd
