#include "mdd/gstar.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdd/errors.hpp"

namespace mdd {

namespace {

void check_betas(double b1, double b2) {
  if (!(b2 < 0.0 && b1 > 1.0) || !std::isfinite(b1) || !std::isfinite(b2))
    fail(ErrorCode::InvalidParams, "need beta2 < 0 < 1 < beta1");
}

double lin(int i, double x, double b1, double b2, double K) {
  const double bi = i == 1 ? b1 : b2, bj = i == 1 ? b2 : b1;
  return (b1 - 1.0) * (b2 - 1.0) * K * x - bi * (bj - 1.0);
}

// (F1 - F2) / x^beta2: same sign and roots as F1 - F2, no overflow for large x.
double scaled_diff(double x, double b1, double b2, double K) {
  return lin(1, x, b1, b2, K) * std::pow(x, b1 - b2) - lin(2, x, b1, b2, K);
}

double bisect(double lo, double hi, double flo, double b1, double b2, double K) {
  for (int it = 0; it < 400 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = scaled_diff(mid, b1, b2, K);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  // Secant polish inside the final bracket.
  const double fl = scaled_diff(lo, b1, b2, K), fh = scaled_diff(hi, b1, b2, K);
  if (fl != fh) {
    const double x = lo - fl * (hi - lo) / (fh - fl);
    if (x >= lo && x <= hi) return x;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FPair F_pair(double x, double b1, double b2, double K) {
  return {lin(1, x, b1, b2, K) * std::pow(x, b1), lin(2, x, b1, b2, K) * std::pow(x, b2)};
}

FPair F_pair_dx(double x, double b1, double b2, double K) {
  const double A = (b1 - 1.0) * (b2 - 1.0) * K;
  auto d = [&](int i) {
    const double bi = i == 1 ? b1 : b2;
    return (A * x * (bi + 1.0) + bi * lin(i, 0.0, b1, b2, K)) * std::pow(x, bi - 1.0);
  };
  return {d(1), d(2)};
}

FPair F_pair_dxx(double x, double b1, double b2, double K) {
  const double A = (b1 - 1.0) * (b2 - 1.0) * K;
  auto d = [&](int i) {
    const double bi = i == 1 ? b1 : b2;
    return bi * (A * x * (bi + 1.0) + (bi - 1.0) * lin(i, 0.0, b1, b2, K)) * std::pow(x, bi - 2.0);
  };
  return {d(1), d(2)};
}

double gstar_h(int i, double b1, double b2, double K) {
  const double bi = i == 1 ? b1 : b2, bj = i == 1 ? b2 : b1;
  return bi * (bj - 1.0) / ((b1 - 1.0) * (b2 - 1.0) * K);
}

GStarResult solve_gstar_floating(double b1, double b2, double K) {
  check_betas(b1, b2);
  if (!(K > 0.0)) fail(ErrorCode::InvalidParams, "K must be positive");
  GStarResult r;
  r.h1 = gstar_h(1, b1, b2, K);
  r.h2 = gstar_h(2, b1, b2, K);
  double lo = r.h1;
  double hi = std::max({2.0 * r.h1, 2.0 / K, 2.0});
  double flo = scaled_diff(lo, b1, b2, K);
  if (!(flo > 0.0)) fail(ErrorCode::BracketFailure, "F1 - F2 not positive at h1");
  int doublings = 0;
  while (scaled_diff(hi, b1, b2, K) > 0.0) {
    lo = hi;
    flo = scaled_diff(lo, b1, b2, K);
    hi *= 2.0;
    if (++doublings > 60 || !std::isfinite(hi))
      fail(ErrorCode::BracketFailure, "no sign change of F1 - F2 above h1");
  }
  r.bracket = {lo, hi};
  r.g_star = bisect(lo, hi, flo, b1, b2, K);
  const auto F = F_pair(r.g_star, b1, b2, K);
  const double A = std::abs((b1 - 1.0) * (b2 - 1.0) * K) * r.g_star;
  r.residual = std::abs(F.f1 - F.f2) / (A * (std::pow(r.g_star, b1) + std::pow(r.g_star, b2)));
  return r;
}

double solve_gstar_fixed(double b1, double b2) {
  check_betas(b1, b2);
  const double g = 1.0;
  const double res = b1 * (std::pow(g, -b2) - 1.0) + b2 * (std::pow(g, -b1) - 1.0);
  if (res != 0.0) fail(ErrorCode::InvalidParams, "fixed-strike slope residual nonzero");
  return g;
}

std::optional<double> gstar_second_root(double b1, double b2, double K) {
  check_betas(b1, b2);
  const double h2 = gstar_h(2, b1, b2, K);
  double lo = h2 * 0.5;
  double flo = scaled_diff(lo, b1, b2, K);
  for (int i = 0; i < 200 && flo > 0.0; ++i) {
    lo *= 0.5;
    flo = scaled_diff(lo, b1, b2, K);
  }
  if (!(flo < 0.0)) return std::nullopt;
  if (!(scaled_diff(h2, b1, b2, K) > 0.0)) return std::nullopt;
  return bisect(lo, h2, flo, b1, b2, K);
}

}  // namespace mdd
