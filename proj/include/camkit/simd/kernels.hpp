#pragma once

#include <cstddef>
#include <string_view>

namespace camkit::simd {

// Flat f32 inner loops used by every layer and explanation method. Each ISA
// variant fills one table; the active table is chosen once per process.
//
// Elementwise entries (mul, add, scale, add_scalar, relu, axpy, mul_acc) are
// bit-identical across variants: every lane performs the same two IEEE
// roundings as the scalar loop. Reductions (sum, dot, sq_dist) accumulate in
// double and may differ from the scalar reference in the last bits because
// the summation order differs.
struct KernelTable {
  std::string_view name;

  void (*mul)(const float* a, const float* b, float* out, std::size_t n);
  void (*add)(const float* a, const float* b, float* out, std::size_t n);
  void (*sub)(const float* a, const float* b, float* out, std::size_t n);
  void (*scale)(const float* a, float s, float* out, std::size_t n);
  void (*add_scalar)(const float* a, float s, float* out, std::size_t n);
  void (*relu)(const float* a, float* out, std::size_t n);
  // y[i] = y[i] + s * x[i]
  void (*axpy)(float s, const float* x, float* y, std::size_t n);
  // y[i] = y[i] + a[i] * b[i]
  void (*mul_acc)(const float* a, const float* b, float* y, std::size_t n);

  double (*sum)(const float* a, std::size_t n);
  double (*dot)(const float* a, const float* b, std::size_t n);
  double (*sq_dist)(const float* a, const float* b, std::size_t n);
  // Largest element; n must be > 0.
  float (*max)(const float* a, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table every library op uses. Picks the widest supported variant unless
/// the CAMKIT_SIMD environment variable is set to "scalar".
const KernelTable& active();

}  // namespace camkit::simd
