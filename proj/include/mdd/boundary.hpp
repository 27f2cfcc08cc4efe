#pragma once

#include <limits>
#include <vector>

#include "mdd/model.hpp"

namespace mdd {

struct MeshSpec {
  double eps_start = 1e-4;
  double y_min = 0.0;
  double rtol = 1e-10;
  double atol = 1e-14;
  int max_steps = 5'000'000;
  // Integration stops once b exceeds b_cap_factor * s (b is then treated as +inf below).
  double b_cap_factor = 100.0;
  int max_crossings = 16;
  int ladder_depth = 12;
};

enum class CrossingKind { Exit, Reentry };

struct Crossing {
  double y;
  CrossingKind kind;
};

struct BoundarySlice {
  double s = 0.0;
  PayoffKind kind = PayoffKind::FixedStrike;
  double K = 0.0;
  double rho = 0.0;
  double eta = 0.0;
  double g_start = 0.0;
  std::vector<double> y_grid;  // descending
  std::vector<double> b_values;
  std::vector<double> slopes;  // d b / d y
  std::vector<Crossing> crossings;
  int l_tilde_prime = 0;
  bool infinite_below = false;
  std::size_t steps = 0;

  double y0() const { return y_grid.front(); }
  double y_end() const { return y_grid.back(); }
  // +inf below the integrated range when infinite_below; OutsideSolvedRange otherwise.
  double b_at(double y) const;
  int region_index(double y) const;
};

double lower_bound_b(const CoefficientField& field, double rho, double K, double s, double y);
double constraint_margin(const BoundarySlice& slice, const CoefficientField& field, double y);

double rhs_fixed_beta(double s, double y, double b, double beta1, double beta2, double K);
double rhs_fixed_general(const CoefficientField& field, double s, double y, double b, double rho, double K);
double rhs_float_beta(double s, double y, double b, double beta1, double beta2, double K);
double rhs_float_general(const CoefficientField& field, double s, double y, double b, double rho, double K);

// Starting slope b/(s-y) at y0 for the unperturbed solution.
double base_start_slope(double s, PayoffKind kind, const CoefficientField& field, const MarketParams& params,
                        const MeshSpec& mesh);

BoundarySlice integrate_slice(double s, PayoffKind kind, const CoefficientField& field,
                              const MarketParams& params, const MeshSpec& mesh, double eta = 0.0);

struct LadderMember {
  double eta;
  bool admissible;
  BoundarySlice slice;
};

std::vector<LadderMember> perturbation_ladder(double s, PayoffKind kind, const CoefficientField& field,
                                              const MarketParams& params, const MeshSpec& mesh);

// Largest relative amount by which hi falls below lo on lo's mesh (0 when ordered).
double ordering_deficit(const BoundarySlice& lo, const BoundarySlice& hi);

BoundarySlice select_minimal(double s, PayoffKind kind, const CoefficientField& field,
                             const MarketParams& params, const MeshSpec& mesh = {});

class BoundaryFamily {
 public:
  BoundaryFamily() = default;
  BoundaryFamily(std::vector<double> s_mesh, std::vector<BoundarySlice> slices);

  const std::vector<double>& s_mesh() const { return s_mesh_; }
  const std::vector<BoundarySlice>& slices() const { return slices_; }
  const BoundarySlice& slice(std::size_t i) const { return slices_[i]; }

  // b at arbitrary s, interpolated between neighbouring slices at equal depth s-y.
  double b_at(double s, double y) const;
  // Whether b_at had to extrapolate beyond the s-mesh.
  bool extrapolates(double s) const;
  // First mesh index j > i with b(s_j, y) <= s_j, or -1 (s-bar is +inf).
  int sbar_index(std::size_t i, double y) const;
  double sbar(std::size_t i, double y) const;

 private:
  std::vector<double> s_mesh_;
  std::vector<BoundarySlice> slices_;
};

BoundaryFamily build_family(const std::vector<double>& s_mesh, PayoffKind kind, const CoefficientField& field,
                            const MarketParams& params, const MeshSpec& mesh = {});

}  // namespace mdd
