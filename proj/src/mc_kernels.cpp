#include "mdd/mc_kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mdd/errors.hpp"

namespace mdd {

namespace expc {
constexpr double kLog2e = 1.4426950408889634;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kLo = -700.0, kHi = 700.0;
}  // namespace expc

double exp_kernel(double x) {
  using namespace expc;
  x = std::min(std::max(x, kLo), kHi);
  const double n = std::nearbyint(x * kLog2e);
  double r = std::fma(-n, kLn2Hi, x);
  r = std::fma(-n, kLn2Lo, r);
  double p = kExpTaylor[13];
  for (int k = 12; k >= 0; --k) p = std::fma(p, r, kExpTaylor[k]);
  const std::int64_t bits = (static_cast<std::int64_t>(n) + 1023) << 52;
  return p * std::bit_cast<double>(bits);
}

void step_scalar(const StepArgs& a) {
  for (std::size_t k = 0; k < a.n; ++k) {
    const double l0 = a.logx[k];
    const double l1 = l0 + (a.mu[k] + a.vol[k] * a.z[k]);
    double hi, lo;
    if (a.bridge) {
      const double d = l1 - l0;
      const double v2 = a.vol[k] * a.vol[k];
      hi = 0.5 * ((l0 + l1) + std::sqrt(d * d + 2.0 * v2 * a.emax[k]));
      lo = 0.5 * ((l0 + l1) - std::sqrt(d * d + 2.0 * v2 * a.emin[k]));
    } else {
      hi = std::max(l0, l1);
      lo = std::min(l0, l1);
    }
    const double x1 = exp_kernel(l1);
    const double xhi = exp_kernel(hi);
    const double xlo = exp_kernel(lo);
    const double s0 = a.s[k], y0 = a.y[k];
    const double s1 = std::max(s0, xhi);
    const double y1 = std::max(std::max(y0, s0 - xlo), s1 - x1);
    std::uint8_t f = 0;
    if (s1 != s0 || y1 != y0) f |= kChanged;
    if (hi >= a.logb[k]) f |= kHit;
    a.logx[k] = l1;
    a.s[k] = s1;
    a.y[k] = y1;
    a.lmax[k] = hi;
    a.flags[k] = f;
  }
}

bool avx2_available() {
#if defined(MDD_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

SimdLevel resolve_simd(const std::string& request) {
  if (request == "scalar") return SimdLevel::Scalar;
  if (request == "avx2") {
    if (!avx2_available()) fail(ErrorCode::InvalidParams, "AVX2 kernel requested but unavailable");
    return SimdLevel::Avx2;
  }
  if (request == "auto" || request.empty()) return avx2_available() ? SimdLevel::Avx2 : SimdLevel::Scalar;
  fail(ErrorCode::InvalidParams, "unknown simd level '" + request + "'");
}

StepKernel step_kernel(SimdLevel level) {
#if defined(MDD_WITH_AVX2)
  if (level == SimdLevel::Avx2) return &step_avx2;
#endif
  (void)level;
  return &step_scalar;
}

std::string to_string(SimdLevel level) { return level == SimdLevel::Avx2 ? "avx2" : "scalar"; }

}  // namespace mdd
