#include <immintrin.h>

#include "kernels_internal.hpp"

namespace stapdp::kernels::detail {

namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

// Four clusters per lane group: the panel stores each coordinate contiguously
// across clusters, so one load fetches coordinate m of clusters k..k+3.
void cluster_scores_avx2(const double* gram, const double* cross, const double* panel, std::size_t dim,
                         std::size_t clusters, std::size_t stride, double* out) {
  std::size_t k = 0;
  for (; k + 4 <= clusters; k += 4) {
    __m256d score = _mm256_setzero_pd();
    for (std::size_t l = 0; l < dim; ++l) {
      __m256d g_b = _mm256_setzero_pd();
      const double* grow = gram + l * dim;
      for (std::size_t m = 0; m < dim; ++m) {
        g_b = _mm256_fmadd_pd(_mm256_broadcast_sd(grow + m), _mm256_loadu_pd(panel + m * stride + k), g_b);
      }
      const __m256d shifted = _mm256_sub_pd(g_b, _mm256_set1_pd(2.0 * cross[l]));
      score = _mm256_fmadd_pd(_mm256_loadu_pd(panel + l * stride + k), shifted, score);
    }
    _mm256_storeu_pd(out + k, score);
  }
  for (; k < clusters; ++k) {
    double score = 0.0;
    for (std::size_t l = 0; l < dim; ++l) {
      double g_b = 0.0;
      for (std::size_t m = 0; m < dim; ++m) g_b += gram[l * dim + m] * panel[m * stride + k];
      score += panel[l * stride + k] * (g_b - 2.0 * cross[l]);
    }
    out[k] = score;
  }
}

double weighted_dot_avx2(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc);
  }
  double sum = horizontal_sum(acc);
  for (; i < n; ++i) sum += w[i] * a[i] * b[i];
  return sum;
}

void accumulate_avx2(double* dst, const double* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
  }
  for (; i < n; ++i) dst[i] += src[i];
}

}  // namespace stapdp::kernels::detail
