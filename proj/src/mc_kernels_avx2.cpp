#include <immintrin.h>

#include "mdd/mc_kernels.hpp"

namespace mdd {

namespace {

__m256d exp4(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-700.0), hi = _mm256_set1_pd(700.0);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);
  __m256d p = _mm256_set1_pd(kExpTaylor[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kExpTaylor[k]));
  const __m256i ni = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

}  // namespace

void step_avx2(const StepArgs& a) {
  const __m256d half = _mm256_set1_pd(0.5), two = _mm256_set1_pd(2.0);
  for (std::size_t k = 0; k < a.n; k += 4) {
    const __m256d l0 = _mm256_loadu_pd(a.logx + k);
    const __m256d vol = _mm256_loadu_pd(a.vol + k);
    const __m256d l1 =
        _mm256_add_pd(l0, _mm256_add_pd(_mm256_loadu_pd(a.mu + k), _mm256_mul_pd(vol, _mm256_loadu_pd(a.z + k))));
    __m256d hi, lo;
    if (a.bridge) {
      const __m256d d = _mm256_sub_pd(l1, l0);
      const __m256d d2 = _mm256_mul_pd(d, d);
      const __m256d v2 = _mm256_mul_pd(vol, vol);
      const __m256d sum = _mm256_add_pd(l0, l1);
      const __m256d rh = _mm256_sqrt_pd(_mm256_add_pd(d2, _mm256_mul_pd(_mm256_mul_pd(two, v2), _mm256_loadu_pd(a.emax + k))));
      const __m256d rl = _mm256_sqrt_pd(_mm256_add_pd(d2, _mm256_mul_pd(_mm256_mul_pd(two, v2), _mm256_loadu_pd(a.emin + k))));
      hi = _mm256_mul_pd(half, _mm256_add_pd(sum, rh));
      lo = _mm256_mul_pd(half, _mm256_sub_pd(sum, rl));
    } else {
      hi = _mm256_max_pd(l0, l1);
      lo = _mm256_min_pd(l0, l1);
    }
    const __m256d x1 = exp4(l1), xhi = exp4(hi), xlo = exp4(lo);
    const __m256d s0 = _mm256_loadu_pd(a.s + k), y0 = _mm256_loadu_pd(a.y + k);
    const __m256d s1 = _mm256_max_pd(s0, xhi);
    const __m256d y1 = _mm256_max_pd(_mm256_max_pd(y0, _mm256_sub_pd(s0, xlo)), _mm256_sub_pd(s1, x1));
    const int ch = _mm256_movemask_pd(_mm256_or_pd(_mm256_cmp_pd(s1, s0, _CMP_NEQ_OQ), _mm256_cmp_pd(y1, y0, _CMP_NEQ_OQ)));
    const int ht = _mm256_movemask_pd(_mm256_cmp_pd(hi, _mm256_loadu_pd(a.logb + k), _CMP_GE_OQ));
    _mm256_storeu_pd(a.logx + k, l1);
    _mm256_storeu_pd(a.s + k, s1);
    _mm256_storeu_pd(a.y + k, y1);
    _mm256_storeu_pd(a.lmax + k, hi);
    for (int l = 0; l < 4; ++l)
      a.flags[k + l] = static_cast<std::uint8_t>(((ch >> l) & 1) * kChanged | ((ht >> l) & 1) * kHit);
  }
}

}  // namespace mdd
