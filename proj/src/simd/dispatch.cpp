#include <cstdlib>
#include <string_view>

#include "camkit/simd/kernels.hpp"

#if defined(CAMKIT_HAVE_AVX2)
#include "kernels_avx2.hpp"
#endif

namespace camkit::simd {

const KernelTable* avx2_kernels() {
#if defined(CAMKIT_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  if (!supported) return nullptr;
  static const KernelTable table{
      "avx2",        avx2::mul,     avx2::add, avx2::sub,     avx2::scale,
      avx2::add_scalar, avx2::relu, avx2::axpy, avx2::mul_acc, avx2::sum,
      avx2::dot,     avx2::sq_dist, avx2::max,
  };
  return &table;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* env = std::getenv("CAMKIT_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
    if (const KernelTable* wide = avx2_kernels()) return *wide;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace camkit::simd
