#pragma once

#include "mdd/model.hpp"

namespace mdd {

struct ValueCoefficients {
  double c1 = 0.0, c2 = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;

  double value(double x) const;
  double dx(double x) const;
  double dxx(double x) const;
};

double payoff(PayoffKind kind, double K, double x, double s, double y);
// x-derivative of the payoff where it is positive, 0 elsewhere.
double payoff_dx(PayoffKind kind, double K, double x, double s, double y);

ValueCoefficients fixed_strike_coeffs(double s, double y, double b, double g1, double g2, double K);
ValueCoefficients floating_strike_coeffs(double s, double y, double b, double g1, double g2, double K);
ValueCoefficients region1_coeffs(PayoffKind kind, double s, double y, double b, double g1, double g2,
                                 double K);

double value_region1(double x, double s, double y, const ValueCoefficients& coeffs);

}  // namespace mdd
