#pragma once

#include <array>
#include <optional>

namespace mdd {

struct FPair {
  double f1, f2;
};

struct GStarResult {
  double g_star = 0.0;
  double h1 = 0.0, h2 = 0.0;
  std::array<double, 2> bracket{0.0, 0.0};
  // |F1 - F2| / (|A| g (g^beta1 + g^beta2)), A = (beta1-1)(beta2-1)K.
  double residual = 0.0;
};

FPair F_pair(double x, double beta1, double beta2, double K);
FPair F_pair_dx(double x, double beta1, double beta2, double K);
FPair F_pair_dxx(double x, double beta1, double beta2, double K);

double gstar_h(int i, double beta1, double beta2, double K);

GStarResult solve_gstar_floating(double beta1, double beta2, double K);
double solve_gstar_fixed(double beta1, double beta2);

// Diagnostic root of F1 = F2 on (0, h2); rejected by the pricing path.
std::optional<double> gstar_second_root(double beta1, double beta2, double K);

}  // namespace mdd
