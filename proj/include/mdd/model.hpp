#pragma once

#include <array>
#include <string>

namespace mdd {

enum class PayoffKind { FixedStrike, FloatingStrike };

std::string to_string(PayoffKind kind);
PayoffKind payoff_kind_from_string(const std::string& name);

struct MarketParams {
  double rho = 0.0;
  double K = 0.0;
  PayoffKind kind = PayoffKind::FixedStrike;

  static MarketParams make(double rho, double K, PayoffKind kind);
};

// f(s) = level + amplitude * exp(-decay * s), scaled by (1 + tilt * y / s).
struct Profile {
  double level = 0.0;
  double amplitude = 0.0;
  double decay = 0.0;
  double tilt = 0.0;
};

struct CoefficientValues {
  double delta, sigma;
  double ddelta_ds, ddelta_dy;
  double dsigma_ds, dsigma_dy;
};

enum class FamilyKind { Constant, SeparableS, GeneralSY };

std::string to_string(FamilyKind kind);

struct AdmissibleBox {
  double s_min = 1e-6;
  double s_max = 1e6;
};

class CoefficientField {
 public:
  static CoefficientField constant(double delta, double sigma, AdmissibleBox box = {});
  static CoefficientField separable_s(Profile delta, Profile sigma, AdmissibleBox box = {});
  static CoefficientField general_sy(Profile delta, Profile sigma, AdmissibleBox box = {});

  CoefficientValues eval(double s, double y) const;

  FamilyKind family() const { return family_; }
  const Profile& delta_profile() const { return delta_; }
  const Profile& sigma_profile() const { return sigma_; }
  const AdmissibleBox& box() const { return box_; }
  bool depends_on_s() const { return family_ != FamilyKind::Constant; }
  bool depends_on_y() const { return family_ == FamilyKind::GeneralSY; }

 private:
  CoefficientField(FamilyKind family, Profile delta, Profile sigma, AdmissibleBox box);
  void check_box() const;

  FamilyKind family_;
  Profile delta_;
  Profile sigma_;
  AdmissibleBox box_;
};

CoefficientValues eval_coeffs(const CoefficientField& field, double s, double y);

struct GammaPair {
  double gamma1, gamma2;
};

struct Exponents {
  double gamma1, gamma2;
  std::array<double, 2> d_gamma_s;
  std::array<double, 2> d_gamma_y;
};

GammaPair gamma_exponents(double delta, double sigma, double rho);

// Returns {d_s gamma1, d_s gamma2, d_y gamma1, d_y gamma2}.
std::array<double, 4> gamma_partials(const CoefficientField& field, double s, double y, double rho);

Exponents exponents_at(const CoefficientField& field, double s, double y, double rho);

double characteristic_residual(double gamma, double delta, double sigma, double rho);

struct State {
  double x, s, y;

  static State make(double x, double s, double y);
  static bool valid(double x, double s, double y);
  bool on_d1() const { return x == s; }
  bool on_d2() const { return x == s - y; }
};

}  // namespace mdd
