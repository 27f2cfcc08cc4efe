#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace mdd {

// One log-Euler step for a batch of lanes. n must be a multiple of 4.
struct StepArgs {
  std::size_t n;
  double* logx;
  double* s;
  double* y;
  const double* mu;    // (rho - delta - sigma^2/2) dt
  const double* vol;   // sigma sqrt(dt)
  const double* logb;  // log of the exercise boundary at the current (S,Y)
  const double* z;     // standard normals
  const double* emax;  // Exp(1) variates for the in-step maximum (bridge only)
  const double* emin;  // Exp(1) variates for the in-step minimum (bridge only)
  double* lmax;        // out: log of the in-step maximum
  std::uint8_t* flags; // out: bit 0 = S or Y changed, bit 1 = boundary reached
  bool bridge;
};

enum : std::uint8_t { kChanged = 1, kHit = 2 };

enum class SimdLevel { Scalar, Avx2 };

using StepKernel = void (*)(const StepArgs&);

void step_scalar(const StepArgs& a);
#if defined(MDD_WITH_AVX2)
void step_avx2(const StepArgs& a);
#endif

bool avx2_available();
// "auto" picks AVX2 when both compiled in and supported by the CPU.
SimdLevel resolve_simd(const std::string& request);
StepKernel step_kernel(SimdLevel level);
std::string to_string(SimdLevel level);

// Taylor coefficients 1/k!, k = 0..13; with |r| <= ln2/2 the truncation stays below 1e-17.
inline constexpr double kExpTaylor[14] = {
    1.0, 1.0, 0.5, 1.6666666666666666e-01, 4.1666666666666664e-02, 8.3333333333333332e-03, 1.3888888888888889e-03,
    1.9841269841269841e-04, 2.4801587301587302e-05, 2.7557319223985893e-06, 2.7557319223985888e-07,
    2.5052108385441720e-08, 2.0876756987868100e-09, 1.6059043836821613e-10};

// Polynomial exp shared bit-for-bit by every kernel.
double exp_kernel(double x);

}  // namespace mdd
