#pragma once

// Entry points of the AVX2 translation unit. That file is compiled with
// -mavx2 and must stay free of inline library code so nothing built for AVX2
// can be merged into callers that run on older CPUs.

#include <cstddef>

namespace camkit::simd::avx2 {

void mul(const float* a, const float* b, float* out, std::size_t n);
void add(const float* a, const float* b, float* out, std::size_t n);
void sub(const float* a, const float* b, float* out, std::size_t n);
void scale(const float* a, float s, float* out, std::size_t n);
void add_scalar(const float* a, float s, float* out, std::size_t n);
void relu(const float* a, float* out, std::size_t n);
void axpy(float s, const float* x, float* y, std::size_t n);
void mul_acc(const float* a, const float* b, float* y, std::size_t n);
double sum(const float* a, std::size_t n);
double dot(const float* a, const float* b, std::size_t n);
double sq_dist(const float* a, const float* b, std::size_t n);
float max(const float* a, std::size_t n);

}  // namespace camkit::simd::avx2
