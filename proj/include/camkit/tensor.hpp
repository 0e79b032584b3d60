#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace camkit {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major f32 array. The shape is fixed at construction and the
/// elements are only written by constructors and the free-function ops below,
/// so a Tensor can be shared read-only between threads.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, float value);
  static Tensor scalar(float value);
  /// 2-D literal, mostly for tests: Tensor::matrix({{1, 2}, {3, 4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);
  static Tensor vector(std::initializer_list<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  float operator[](std::size_t i) const { return data_[i]; }
  float at(std::initializer_list<std::size_t> index) const;

  /// Same elements under a new shape with equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Contiguous slab along axis 0: for [F, ...] returns element f as [...].
  Tensor slice0(std::size_t index) const;

  /// Moves the storage out; the tensor is left empty.
  std::vector<float> release() &&;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Bitwise equality of two tensors (distinguishes -0 from +0 and NaN payloads).
bool bit_identical(const Tensor& a, const Tensor& b);

/// Largest |a[i] - b[i]|; shapes must match.
float max_abs_diff(const Tensor& a, const Tensor& b);

// Arithmetic. All ops reject shape mismatches; there is no broadcasting
// beyond the scalar forms.
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, float value);
Tensor mul_scalar(const Tensor& a, float value);
Tensor relu(const Tensor& a);

/// Sums over the listed axes (distinct, in range); the output drops them.
/// Accumulation is in double so the mean of a constant tensor is exact.
Tensor reduce_sum(const Tensor& a, std::span<const std::size_t> axes);
Tensor reduce_mean(const Tensor& a, std::span<const std::size_t> axes);
Tensor reduce_sum(const Tensor& a, std::initializer_list<std::size_t> axes);
Tensor reduce_mean(const Tensor& a, std::initializer_list<std::size_t> axes);

float sum_all(const Tensor& a);
float max_value(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);

}  // namespace camkit
