#include "camkit/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "camkit/error.hpp"
#include "camkit/simd/kernels.hpp"

namespace camkit {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": shape mismatch " +
                                               shape_to_string(a.shape()) + " vs " +
                                               shape_to_string(b.shape()));
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t d : shape_)
    if (d == 0) throw Error(ErrorCode::kInvalidArgument, "tensor dimensions must be positive");
  if (shape_size(shape_) != data_.size())
    throw Error(ErrorCode::kShapeMismatch, "tensor shape " + shape_to_string(shape_) + " holds " +
                                               std::to_string(shape_size(shape_)) + " elements, got " +
                                               std::to_string(data_.size()));
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0f); }

Tensor Tensor::filled(Shape shape, float value) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value));
}

Tensor Tensor::scalar(float value) { return Tensor({}, {value}); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  std::vector<float> data;
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error(ErrorCode::kInvalidArgument, "ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<float> values) {
  return Tensor({values.size()}, std::vector<float>(values));
}

float Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) throw Error(ErrorCode::kInvalidArgument, "index rank mismatch");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) throw Error(ErrorCode::kInvalidArgument, "index out of range");
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return data_[flat];
}

Tensor Tensor::reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }

Tensor Tensor::reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

Tensor Tensor::slice0(std::size_t index) const {
  if (shape_.empty() || index >= shape_[0]) throw Error(ErrorCode::kInvalidArgument, "slice0 out of range");
  Shape inner(shape_.begin() + 1, shape_.end());
  const std::size_t n = shape_size(inner);
  return Tensor(std::move(inner), std::vector<float>(data_.begin() + index * n, data_.begin() + (index + 1) * n));
}

std::vector<float> Tensor::release() && {
  shape_.clear();
  return std::move(data_);
}

bool bit_identical(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
  return true;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "elementwise_mul");
  std::vector<float> out(a.size());
  simd::active().mul(a.data().data(), b.data().data(), out.data(), out.size());
  return Tensor(a.shape(), std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<float> out(a.size());
  simd::active().add(a.data().data(), b.data().data(), out.data(), out.size());
  return Tensor(a.shape(), std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<float> out(a.size());
  simd::active().sub(a.data().data(), b.data().data(), out.data(), out.size());
  return Tensor(a.shape(), std::move(out));
}

Tensor add_scalar(const Tensor& a, float value) {
  std::vector<float> out(a.size());
  simd::active().add_scalar(a.data().data(), value, out.data(), out.size());
  return Tensor(a.shape(), std::move(out));
}

Tensor mul_scalar(const Tensor& a, float value) {
  std::vector<float> out(a.size());
  simd::active().scale(a.data().data(), value, out.data(), out.size());
  return Tensor(a.shape(), std::move(out));
}

Tensor relu(const Tensor& a) {
  std::vector<float> out(a.size());
  simd::active().relu(a.data().data(), out.data(), out.size());
  return Tensor(a.shape(), std::move(out));
}

namespace {

// Returns the double-precision sums and the number of elements folded into
// each output element.
std::pair<Tensor, std::size_t> reduce_impl(const Tensor& a, std::span<const std::size_t> axes,
                                           bool mean) {
  const std::size_t rank = a.rank();
  std::vector<bool> drop(rank, false);
  for (std::size_t axis : axes) {
    if (axis >= rank)
      throw Error(ErrorCode::kInvalidArgument,
                  "reduce: axis " + std::to_string(axis) + " invalid for rank " + std::to_string(rank));
    if (drop[axis]) throw Error(ErrorCode::kInvalidArgument, "reduce: duplicate axis " + std::to_string(axis));
    drop[axis] = true;
  }
  if (axes.empty()) return {a, 1};

  Shape out_shape;
  std::size_t folded = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    if (drop[i])
      folded *= a.dim(i);
    else
      out_shape.push_back(a.dim(i));
  }

  // Fast path: the dropped axes form the contiguous trailing block.
  std::size_t first_dropped = rank;
  while (first_dropped > 0 && drop[first_dropped - 1]) --first_dropped;
  const bool trailing = std::count(drop.begin(), drop.end(), true) ==
                        static_cast<std::ptrdiff_t>(rank - first_dropped);

  const std::size_t out_n = shape_size(out_shape);
  std::vector<double> acc(out_n, 0.0);
  const float* src = a.data().data();
  if (trailing) {
    for (std::size_t o = 0; o < out_n; ++o) acc[o] = simd::active().sum(src + o * folded, folded);
  } else {
    // Generic path: walk every element and map it onto its output slot.
    std::vector<std::size_t> index(rank, 0);
    for (std::size_t flat = 0; flat < a.size(); ++flat) {
      std::size_t o = 0;
      for (std::size_t i = 0; i < rank; ++i)
        if (!drop[i]) o = o * a.dim(i) + index[i];
      acc[o] += src[flat];
      for (std::size_t i = rank; i-- > 0;) {
        if (++index[i] < a.dim(i)) break;
        index[i] = 0;
      }
    }
  }
  std::vector<float> out(out_n);
  for (std::size_t o = 0; o < out_n; ++o)
    out[o] = static_cast<float>(mean ? acc[o] / static_cast<double>(folded) : acc[o]);
  return {Tensor(std::move(out_shape), std::move(out)), folded};
}

}  // namespace

Tensor reduce_sum(const Tensor& a, std::span<const std::size_t> axes) {
  return reduce_impl(a, axes, false).first;
}

Tensor reduce_mean(const Tensor& a, std::span<const std::size_t> axes) {
  return reduce_impl(a, axes, true).first;
}

Tensor reduce_sum(const Tensor& a, std::initializer_list<std::size_t> axes) {
  return reduce_sum(a, std::span<const std::size_t>(axes.begin(), axes.size()));
}

Tensor reduce_mean(const Tensor& a, std::initializer_list<std::size_t> axes) {
  return reduce_mean(a, std::span<const std::size_t>(axes.begin(), axes.size()));
}

float sum_all(const Tensor& a) { return static_cast<float>(simd::active().sum(a.data().data(), a.size())); }

float max_value(const Tensor& a) {
  if (a.empty()) throw Error(ErrorCode::kInvalidArgument, "max of empty tensor");
  return simd::active().max(a.data().data(), a.size());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw Error(ErrorCode::kShapeMismatch, "matmul expects rank-2 operands, got " + shape_to_string(a.shape()) +
                                               " and " + shape_to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw Error(ErrorCode::kShapeMismatch, "matmul inner dimension mismatch " + shape_to_string(a.shape()) +
                                               " x " + shape_to_string(b.shape()));
  std::vector<float> bt(k * n);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < n; ++c) bt[c * k + r] = b[r * n + c];
  std::vector<float> out(m * n);
  const auto& kern = simd::active();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = static_cast<float>(kern.dot(a.data().data() + i * k, bt.data() + j * k, k));
  return Tensor({m, n}, std::move(out));
}

}  // namespace camkit
