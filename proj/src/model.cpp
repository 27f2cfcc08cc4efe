#include "mdd/model.hpp"

#include <cmath>

#include "mdd/errors.hpp"

namespace mdd {

std::string to_string(PayoffKind kind) {
  return kind == PayoffKind::FixedStrike ? "fixed" : "floating";
}

PayoffKind payoff_kind_from_string(const std::string& name) {
  if (name == "fixed" || name == "fixed_strike" || name == "FixedStrike") return PayoffKind::FixedStrike;
  if (name == "floating" || name == "floating_strike" || name == "FloatingStrike")
    return PayoffKind::FloatingStrike;
  fail(ErrorCode::InvalidParams, "unknown payoff kind '" + name + "'");
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Constant: return "constant";
    case FamilyKind::SeparableS: return "separable_s";
    case FamilyKind::GeneralSY: return "general_sy";
  }
  return "unknown";
}

MarketParams MarketParams::make(double rho, double K, PayoffKind kind) {
  if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorCode::InvalidParams, "rho must be positive");
  if (!(K > 0.0) || !std::isfinite(K)) fail(ErrorCode::InvalidParams, "K must be positive");
  return MarketParams{rho, K, kind};
}

namespace {

struct ProfileEval {
  double value, ds, dy;
};

ProfileEval eval_profile(const Profile& p, double s, double y) {
  const double e = std::exp(-p.decay * s);
  const double h = p.level + p.amplitude * e;
  const double dh = -p.amplitude * p.decay * e;
  const double m = 1.0 + p.tilt * y / s;
  return {h * m, dh * m - h * p.tilt * y / (s * s), h * p.tilt / s};
}

double radical_inverse(unsigned i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

}  // namespace

CoefficientField::CoefficientField(FamilyKind family, Profile delta, Profile sigma, AdmissibleBox box)
    : family_(family), delta_(delta), sigma_(sigma), box_(box) {
  if (!(box_.s_min > 0.0) || !(box_.s_max > box_.s_min))
    fail(ErrorCode::InvalidParams, "admissible box must satisfy 0 < s_min < s_max");
  if (delta_.decay < 0.0 || sigma_.decay < 0.0)
    fail(ErrorCode::InvalidParams, "decay rates must be nonnegative");
  check_box();
}

CoefficientField CoefficientField::constant(double delta, double sigma, AdmissibleBox box) {
  return CoefficientField(FamilyKind::Constant, Profile{delta, 0, 0, 0}, Profile{sigma, 0, 0, 0}, box);
}

CoefficientField CoefficientField::separable_s(Profile delta, Profile sigma, AdmissibleBox box) {
  delta.tilt = 0.0;
  sigma.tilt = 0.0;
  return CoefficientField(FamilyKind::SeparableS, delta, sigma, box);
}

CoefficientField CoefficientField::general_sy(Profile delta, Profile sigma, AdmissibleBox box) {
  return CoefficientField(FamilyKind::GeneralSY, delta, sigma, box);
}

void CoefficientField::check_box() const {
  auto probe = [&](double s, double y) {
    const auto d = eval_profile(delta_, s, y);
    const auto v = eval_profile(sigma_, s, y);
    if (!(d.value > 0.0) || !(v.value > 0.0))
      fail(ErrorCode::NonPositiveCoefficient,
           "coefficient not positive at s=" + std::to_string(s) + " y=" + std::to_string(y));
    if (!std::isfinite(d.value + d.ds + d.dy + v.value + v.ds + v.dy))
      fail(ErrorCode::InvalidParams, "coefficient not finite on the admissible box");
  };
  for (double s : {box_.s_min, box_.s_max})
    for (double frac : {0.0, 1.0}) probe(s, frac * s);
  const double ls = std::log(box_.s_min), le = std::log(box_.s_max);
  for (unsigned i = 1; i <= 100; ++i) {
    const double s = std::exp(ls + (le - ls) * radical_inverse(i, 2));
    probe(s, radical_inverse(i, 3) * s);
  }
}

CoefficientValues CoefficientField::eval(double s, double y) const {
  if (!(s >= box_.s_min && s <= box_.s_max) || !(y >= 0.0 && y <= s))
    fail(ErrorCode::OutOfBox, "(s,y)=(" + std::to_string(s) + "," + std::to_string(y) + ")");
  if (family_ == FamilyKind::Constant)
    return {delta_.level, sigma_.level, 0.0, 0.0, 0.0, 0.0};
  const auto d = eval_profile(delta_, s, y);
  const auto v = eval_profile(sigma_, s, y);
  if (!(d.value > 0.0) || !(v.value > 0.0))
    fail(ErrorCode::NonPositiveCoefficient, "coefficient not positive");
  return {d.value, v.value, d.ds, d.dy, v.ds, v.dy};
}

CoefficientValues eval_coeffs(const CoefficientField& field, double s, double y) {
  return field.eval(s, y);
}

GammaPair gamma_exponents(double delta, double sigma, double rho) {
  if (!(delta > 0.0) || !(sigma > 0.0) || !(rho > 0.0))
    fail(ErrorCode::InvalidParams, "gamma_exponents needs positive delta, sigma, rho");
  const double s2 = sigma * sigma;
  const double a = 0.5 - (rho - delta) / s2;
  const double c = -2.0 * rho / s2;
  const double R = std::sqrt(a * a - c);
  // Take the root free of cancellation, recover the other from the product.
  if (a >= 0.0) {
    const double g1 = a + R;
    return {g1, c / g1};
  }
  const double g2 = a - R;
  return {c / g2, g2};
}

std::array<double, 4> gamma_partials(const CoefficientField& field, double s, double y, double rho) {
  const auto cv = field.eval(s, y);
  if (field.family() == FamilyKind::Constant) return {0.0, 0.0, 0.0, 0.0};
  const double sg = cv.sigma, s2 = sg * sg, s3 = s2 * sg;
  const double a = 0.5 - (rho - cv.delta) / s2;
  const double R = std::sqrt(a * a + 2.0 * rho / s2);
  auto pair = [&](double dd, double ds) -> std::array<double, 2> {
    const double phi = (sg * dd + 2.0 * (rho - cv.delta) * ds) / s3;
    const double dR = (a * phi * s3 - 2.0 * rho * ds) / (s3 * R);
    return {phi + dR, phi - dR};
  };
  const auto ps = pair(cv.ddelta_ds, cv.dsigma_ds);
  const auto py = pair(cv.ddelta_dy, cv.dsigma_dy);
  return {ps[0], ps[1], py[0], py[1]};
}

Exponents exponents_at(const CoefficientField& field, double s, double y, double rho) {
  const auto cv = field.eval(s, y);
  const auto g = gamma_exponents(cv.delta, cv.sigma, rho);
  const auto p = gamma_partials(field, s, y, rho);
  return {g.gamma1, g.gamma2, {p[0], p[1]}, {p[2], p[3]}};
}

double characteristic_residual(double gamma, double delta, double sigma, double rho) {
  return 0.5 * sigma * sigma * gamma * (gamma - 1.0) + (rho - delta) * gamma - rho;
}

bool State::valid(double x, double s, double y) {
  return std::isfinite(x) && std::isfinite(s) && std::isfinite(y) && s - y > 0.0 && s - y <= x &&
         x <= s && y >= 0.0;
}

State State::make(double x, double s, double y) {
  if (!valid(x, s, y))
    fail(ErrorCode::InvalidState, "state (" + std::to_string(x) + "," + std::to_string(s) + "," +
                                      std::to_string(y) + ") violates 0 < s-y <= x <= s");
  return State{x, s, y};
}

}  // namespace mdd
