#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdd/boundary.hpp"
#include "mdd/mc_kernels.hpp"
#include "mdd/model.hpp"

namespace mdd {

enum class Monitoring { Discrete, Bridge };

std::string to_string(Monitoring m);

struct MCConfig {
  std::uint64_t n_paths = 100000;
  double dt = 1e-3;
  double horizon = 0.0;  // 0 selects 50 / rho
  std::uint64_t seed = 1;
  bool antithetic = false;
  Monitoring monitoring = Monitoring::Discrete;
  std::string simd = "auto";

  void validate() const;
  double horizon_for(double rho) const { return horizon > 0.0 ? horizon : 50.0 / rho; }
};

struct PriceEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t n_exercised = 0;
  double truncation_bound = 0.0;
  bool extrapolated = false;
};

class ExercisePolicy {
 public:
  virtual ~ExercisePolicy() = default;
  virtual double boundary(double s, double y) const = 0;
  virtual bool extrapolates(double) const { return false; }
};

// b(s,y) = scale * family.b_at(s,y).
class FamilyPolicy : public ExercisePolicy {
 public:
  FamilyPolicy(const BoundaryFamily& family, double scale = 1.0) : family_(family), scale_(scale) {}
  double boundary(double s, double y) const override { return scale_ * family_.b_at(s, y); }
  bool extrapolates(double s) const override { return family_.extrapolates(s); }

 private:
  const BoundaryFamily& family_;
  double scale_;
};

// b(s,y) = g (s - y).
class LinePolicy : public ExercisePolicy {
 public:
  explicit LinePolicy(double g) : g_(g) {}
  double boundary(double s, double y) const override { return g_ * (s - y); }

 private:
  double g_;
};

// Counter-based stream: splitmix64-seeded xoshiro256** keyed by (seed, path index).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path);
  std::uint64_t next();
  double uniform_open();  // (0, 1]
  double normal();
  double exponential();

 private:
  std::uint64_t st_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct PathPoint {
  double t, x, s, y;
};

std::vector<PathPoint> simulate_path(const CoefficientField& field, double rho, const State& state0,
                                     const MCConfig& config, std::uint64_t path_index);

PriceEstimate price_policy(const ExercisePolicy& policy, const MarketParams& params,
                           const CoefficientField& field, const State& state0, const MCConfig& config);

// Throws HorizonDominates when truncation_bound > 10 * std_err.
void check_horizon(const PriceEstimate& est);

}  // namespace mdd
