#include "tolnet/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <string_view>

namespace tolnet::kern {

const Kernels* avx2_kernels_impl();  // kernels_avx2.cpp

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* g_override = nullptr;

}  // namespace

const Kernels* avx2_kernels() {
  static const Kernels* k = [] {
    const Kernels* impl = avx2_kernels_impl();
    return (impl && cpu_has_avx2_fma()) ? impl : nullptr;
  }();
  return k;
}

const Kernels& active_kernels() {
  if (g_override) return *g_override;
  static const Kernels* picked = [] {
    const char* env = std::getenv("TOLNET_KERNELS");
    if (env) {
      std::string_view want(env);
      if (want == "scalar") return &scalar_kernels();
      if (want == "avx2") {
        if (const Kernels* a = avx2_kernels()) return a;
        std::fprintf(stderr, "tolnet: TOLNET_KERNELS=avx2 requested but AVX2+FMA "
                             "is unavailable; using scalar kernels\n");
        return &scalar_kernels();
      }
      std::fprintf(stderr, "tolnet: unknown TOLNET_KERNELS value '%s' ignored\n", env);
    }
    const Kernels* a = avx2_kernels();
    return a ? a : &scalar_kernels();
  }();
  return *picked;
}

void set_active_kernels(const Kernels* k) { g_override = k; }

}  // namespace tolnet::kern
