#include "camkit/simd/kernels.hpp"

#include <algorithm>

namespace camkit::simd {
namespace {

void mul(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void add(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void scale(const float* a, float s, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void add_scalar(const float* a, float s, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + s;
}

void relu(const float* a, float* out, std::size_t n) {
  // NaN maps to 0, matching _mm256_max_ps(x, 0) which returns the second operand.
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0f ? a[i] : 0.0f;
}

void axpy(float s, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float p = s * x[i];
    y[i] = y[i] + p;
  }
}

void mul_acc(const float* a, const float* b, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float p = a[i] * b[i];
    y[i] = y[i] + p;
  }
}

double sum(const float* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double dot(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double sq_dist(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

float max(const float* a, std::size_t n) {
  float m = a[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, a[i]);
  return m;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar", mul, add, sub, scale, add_scalar, relu, axpy, mul_acc, sum, dot, sq_dist, max,
  };
  return table;
}

}  // namespace camkit::simd
