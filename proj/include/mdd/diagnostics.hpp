#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdd/region2.hpp"
#include "mdd/value.hpp"

namespace mdd {

struct ResidualReport {
  std::string id;
  double x = 0.0, s = 0.0, y = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

using ValueFn = std::function<double(double x, double s, double y)>;

enum class Derivatives { Analytic, FiniteDifference };

struct GeneratorTerms {
  double residual;  // (rho-delta) x V_x + sigma^2/2 x^2 V_xx - rho V
  double scale;     // largest of the three terms in absolute value
};

// Central differences with step 1e-5 x; TooCloseToKink within two steps of d1 or d2.
GeneratorTerms generator_residual(const ValueFn& v, const CoefficientField& field, double rho, double x, double s,
                                  double y);
// Also TooCloseToKink within two steps of b. Analytic mode applies to the region-1 branch only.
GeneratorTerms generator_residual(const PiecewiseValue& pv, double x, double s, double y,
                                  Derivatives mode = Derivatives::Analytic);

// Left slope of the continuation value at b minus the payoff slope there. b defaults to b(s,y);
// a different b probes the fit of the solved value function at a displaced boundary.
double smooth_fit_residual(const PiecewiseValue& pv, double s, double y, std::optional<double> b = std::nullopt,
                           Derivatives mode = Derivatives::FiniteDifference);

enum class Plane { D1, D2 };

// One-sided difference of V in y at x = (s-y)+ (D2) or in s at x = s- (D1).
double normal_reflection_residual(const PiecewiseValue& pv, double s, double y, Plane which);

// Grid-level reflection residuals of a region-2 solution: the centred differences the solver
// collocates, divided by the local step and scaled by s / max(1, |V|).
ResidualNorms grid_reflection_residual(const Region2Grid& grid);

struct VariationalReport {
  std::size_t samples = 0;
  std::size_t below_payoff = 0;        // V < G - tol
  std::size_t stop_not_equal = 0;      // V != G on the stopping branch
  std::size_t not_strict = 0;          // V <= G at a continuation sample with G > 0 or V = 0
  std::size_t skipped = 0;             // outside the solved range
  double worst_gap = 0.0;
  bool pass() const { return below_payoff == 0 && stop_not_equal == 0 && not_strict == 0; }
};

struct SampleBox {
  double s_lo, s_hi;
};

// Uniform states in {s in box, 0 <= y < s, s-y <= x <= s} from a fixed seed.
std::vector<State> sample_states(const SampleBox& box, std::size_t n, std::uint64_t seed);

VariationalReport variational_check(const PiecewiseValue& pv, const std::vector<State>& states, double tol = 1e-10);

// Scale of V used by relative tolerances: K (fixed strike) or K x (floating strike).
double value_scale(const MarketParams& params, double x);

}  // namespace mdd
