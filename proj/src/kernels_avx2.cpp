// Compiled with -mavx2 -mfma; only reached through the dispatch table after a
// runtime CPU check.
#include "kernels_impl.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace heat::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // mul + add rather than fma keeps results identical to the scalar table
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double abs_sum_avx2(const double* x, std::size_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(x + i), mask));
  double sum = hsum(acc);
  for (; i < n; ++i) sum += std::fabs(x[i]);
  return sum;
}

void sign_step_avx2(const double* x, const double* dir, double alpha, double* out,
                    std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d plus = _mm256_set1_pd(1.0);
  const __m256d minus = _mm256_set1_pd(-1.0);
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_loadu_pd(dir + i);
    const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_GT_OQ), plus);
    const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_LT_OQ), minus);
    const __m256d s = _mm256_or_pd(pos, neg);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(va, s)));
  }
  for (; i < n; ++i) {
    const double s = dir[i] > 0.0 ? 1.0 : (dir[i] < 0.0 ? -1.0 : 0.0);
    out[i] = x[i] + alpha * s;
  }
}

void clip_project_avx2(const double* adv, const double* orig, double eps, double* out,
                       std::size_t n) {
  const __m256d ve = _mm256_set1_pd(eps);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  // Operand order mirrors std::max(a, b) == _mm256_max_pd(b, a) (and likewise
  // for min) so signed zeros match the scalar table bit for bit.
  for (; i + 4 <= n; i += 4) {
    const __m256d o = _mm256_loadu_pd(orig + i);
    const __m256d lo = _mm256_max_pd(zero, _mm256_sub_pd(o, ve));
    const __m256d hi = _mm256_min_pd(one, _mm256_add_pd(o, ve));
    const __m256d v = _mm256_max_pd(lo, _mm256_loadu_pd(adv + i));
    _mm256_storeu_pd(out + i, _mm256_min_pd(hi, v));
  }
  for (; i < n; ++i) {
    const double lo = std::max(orig[i] - eps, 0.0);
    const double hi = std::min(orig[i] + eps, 1.0);
    out[i] = std::min(std::max(adv[i], lo), hi);
  }
}

}  // namespace

const KernelTable kAvx2Table{
    "avx2", dot_avx2, axpy_avx2, abs_sum_avx2, sign_step_avx2, clip_project_avx2,
};

}  // namespace heat::kernels::detail
