#pragma once

#include "stapdp/kernels.hpp"

namespace stapdp::kernels::detail {

void cluster_scores_scalar(const double* gram, const double* cross, const double* panel, std::size_t dim,
                           std::size_t clusters, std::size_t stride, double* out);
double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n);
void accumulate_scalar(double* dst, const double* src, std::size_t n);

#if defined(STAPDP_HAVE_AVX2_KERNELS)
void cluster_scores_avx2(const double* gram, const double* cross, const double* panel, std::size_t dim,
                         std::size_t clusters, std::size_t stride, double* out);
double weighted_dot_avx2(const double* w, const double* a, const double* b, std::size_t n);
void accumulate_avx2(double* dst, const double* src, std::size_t n);
#endif

}  // namespace stapdp::kernels::detail
