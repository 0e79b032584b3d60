#pragma once

// Geometry helpers shared by the forward and backward passes.

#include <span>
#include <vector>

#include "camkit/model.hpp"

namespace camkit::detail {

struct ConvGeometry {
  std::size_t f_in, in_h, in_w;
  std::size_t f_out, k_h, k_w;
  std::size_t out_h, out_w;
  Pair stride, padding;
  std::size_t patch;  // f_in * k_h * k_w
};

ConvGeometry conv_geometry(const Conv2d& conv, const Shape& in, const Shape& out);

/// Patch matrix [out_h * out_w, patch]; out-of-bounds taps read as zero.
std::vector<float> im2col(const ConvGeometry& g, std::span<const float> in);

/// Accumulates a patch-gradient matrix back onto the input grid.
void col2im_add(const ConvGeometry& g, std::span<const float> cols, std::span<float> in_grad);

/// Flat index (within the plane) of the first maximum of a pooling window in
/// row-major scan order.
std::size_t window_argmax(const float* plane, std::size_t w, std::size_t y0, std::size_t x0, const Pair& k);

}  // namespace camkit::detail
