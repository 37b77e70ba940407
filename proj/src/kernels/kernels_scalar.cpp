#include "kernels_internal.hpp"

namespace stapdp::kernels::detail {

void cluster_scores_scalar(const double* gram, const double* cross, const double* panel, std::size_t dim,
                           std::size_t clusters, std::size_t stride, double* out) {
  for (std::size_t k = 0; k < clusters; ++k) {
    double score = 0.0;
    for (std::size_t l = 0; l < dim; ++l) {
      double g_b = 0.0;
      for (std::size_t m = 0; m < dim; ++m) g_b += gram[l * dim + m] * panel[m * stride + k];
      score += panel[l * stride + k] * (g_b - 2.0 * cross[l]);
    }
    out[k] = score;
  }
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += w[i] * a[i] * b[i];
  return sum;
}

void accumulate_scalar(double* dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace stapdp::kernels::detail
