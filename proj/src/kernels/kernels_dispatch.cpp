#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"

namespace stapdp::kernels {

namespace {

const KernelTable kScalar{"scalar", detail::cluster_scores_scalar, detail::weighted_dot_scalar,
                          detail::accumulate_scalar};

#if defined(STAPDP_HAVE_AVX2_KERNELS)
const KernelTable kAvx2{"avx2", detail::cluster_scores_avx2, detail::weighted_dot_avx2, detail::accumulate_avx2};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* pick_default() {
  const char* env = std::getenv("STAPDP_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return &kScalar;
  if (const KernelTable* avx = avx2_table()) return avx;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(STAPDP_HAVE_AVX2_KERNELS)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  if (name == "scalar") {
    current().store(&kScalar);
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* avx = avx2_table()) {
      current().store(avx);
      return true;
    }
  }
  return false;
}

}  // namespace stapdp::kernels
