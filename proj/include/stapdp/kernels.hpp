#pragma once

// Data-parallel inner loops of the sampler. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant. The active
// table is chosen once at first use from the CPU's capabilities and can be
// pinned with the STAPDP_KERNELS environment variable ("scalar" or "avx2").

#include <cstddef>
#include <span>
#include <string_view>

namespace stapdp::kernels {

struct KernelTable {
  const char* name;

  // out[k] = b_k^T G b_k - 2 b_k^T c for k < clusters, where G is dim x dim
  // row-major, and b_k is column k of the dim x stride panel (coordinate l of
  // cluster k at panel[l * stride + k]).
  void (*cluster_scores)(const double* gram, const double* cross, const double* panel, std::size_t dim,
                         std::size_t clusters, std::size_t stride, double* out);

  // sum_i w[i] * a[i] * b[i]
  double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);

  // dst[i] += src[i]
  void (*accumulate)(double* dst, const double* src, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when AVX2 kernels were not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

const KernelTable& active();

// Selects a table by name; returns false if unavailable. Not thread-safe with
// concurrent kernel calls, intended for tests and start-up.
bool select(std::string_view name);

// Padded panel stride: clusters rounded up to a multiple of 4.
constexpr std::size_t panel_stride(std::size_t clusters) { return (clusters + 3) / 4 * 4; }

inline void cluster_scores(std::span<const double> gram, std::span<const double> cross, std::span<const double> panel,
                           std::size_t clusters, std::size_t stride, std::span<double> out) {
  active().cluster_scores(gram.data(), cross.data(), panel.data(), cross.size(), clusters, stride, out.data());
}

inline double weighted_dot(std::span<const double> w, std::span<const double> a, std::span<const double> b) {
  return active().weighted_dot(w.data(), a.data(), b.data(), w.size());
}

inline void accumulate(std::span<double> dst, std::span<const double> src) {
  active().accumulate(dst.data(), src.data(), dst.size());
}

}  // namespace stapdp::kernels
