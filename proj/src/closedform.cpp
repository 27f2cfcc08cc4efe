#include "mdd/closedform.hpp"

#include <algorithm>
#include <cmath>

#include "mdd/errors.hpp"

namespace mdd {

double ValueCoefficients::value(double x) const {
  return c1 * std::pow(x, gamma1) + c2 * std::pow(x, gamma2);
}

double ValueCoefficients::dx(double x) const {
  return (c1 * gamma1 * std::pow(x, gamma1) + c2 * gamma2 * std::pow(x, gamma2)) / x;
}

double ValueCoefficients::dxx(double x) const {
  return (c1 * gamma1 * (gamma1 - 1.0) * std::pow(x, gamma1) +
          c2 * gamma2 * (gamma2 - 1.0) * std::pow(x, gamma2)) /
         (x * x);
}

double payoff(PayoffKind kind, double K, double x, double s, double y) {
  const double v = kind == PayoffKind::FixedStrike ? K - s + y : K * x - s + y;
  return std::max(v, 0.0);
}

double payoff_dx(PayoffKind kind, double K, double x, double s, double y) {
  if (kind == PayoffKind::FixedStrike) return 0.0;
  return K * x - s + y > 0.0 ? K : 0.0;
}

namespace {

void check_gammas(double g1, double g2) {
  if (!(g1 != g2) || !std::isfinite(g1) || !std::isfinite(g2))
    fail(ErrorCode::DegenerateExponents, "gamma1 == gamma2");
}

}  // namespace

ValueCoefficients fixed_strike_coeffs(double s, double y, double b, double g1, double g2, double K) {
  check_gammas(g1, g2);
  const double p = K - s + y;
  ValueCoefficients c;
  c.gamma1 = g1;
  c.gamma2 = g2;
  c.c1 = g2 * p / ((g2 - g1) * std::pow(b, g1));
  c.c2 = g1 * p / ((g1 - g2) * std::pow(b, g2));
  return c;
}

ValueCoefficients floating_strike_coeffs(double s, double y, double b, double g1, double g2, double K) {
  check_gammas(g1, g2);
  const double u = s - y;
  ValueCoefficients c;
  c.gamma1 = g1;
  c.gamma2 = g2;
  c.c1 = ((g2 - 1.0) * K * b - g2 * u) / ((g2 - g1) * std::pow(b, g1));
  c.c2 = ((g1 - 1.0) * K * b - g1 * u) / ((g1 - g2) * std::pow(b, g2));
  return c;
}

ValueCoefficients region1_coeffs(PayoffKind kind, double s, double y, double b, double g1, double g2,
                                 double K) {
  return kind == PayoffKind::FixedStrike ? fixed_strike_coeffs(s, y, b, g1, g2, K)
                                         : floating_strike_coeffs(s, y, b, g1, g2, K);
}

double value_region1(double x, double, double, const ValueCoefficients& coeffs) { return coeffs.value(x); }

}  // namespace mdd
