#include "layer_kernels.hpp"

namespace camkit::detail {

ConvGeometry conv_geometry(const Conv2d& conv, const Shape& in, const Shape& out) {
  const Shape& w = conv.weight.shape();
  return ConvGeometry{in[0], in[1], in[2], w[0], w[2], w[3], out[1], out[2], conv.stride, conv.padding,
                      w[1] * w[2] * w[3]};
}

namespace {

// Visits every (position, tap) pair with the source index, or -1 for padding.
template <class F>
void for_each_tap(const ConvGeometry& g, F&& f) {
  for (std::size_t oy = 0; oy < g.out_h; ++oy)
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const std::size_t p = oy * g.out_w + ox;
      std::size_t t = 0;
      for (std::size_t c = 0; c < g.f_in; ++c)
        for (std::size_t ky = 0; ky < g.k_h; ++ky)
          for (std::size_t kx = 0; kx < g.k_w; ++kx, ++t) {
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride[0] + ky) -
                                     static_cast<std::ptrdiff_t>(g.padding[0]);
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * g.stride[1] + kx) -
                                     static_cast<std::ptrdiff_t>(g.padding[1]);
            const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(g.in_h) &&
                                x < static_cast<std::ptrdiff_t>(g.in_w);
            f(p * g.patch + t,
              inside ? static_cast<std::ptrdiff_t>((c * g.in_h + static_cast<std::size_t>(y)) * g.in_w +
                                                   static_cast<std::size_t>(x))
                     : std::ptrdiff_t{-1});
          }
    }
}

}  // namespace

std::vector<float> im2col(const ConvGeometry& g, std::span<const float> in) {
  std::vector<float> cols(g.out_h * g.out_w * g.patch, 0.0f);
  for_each_tap(g, [&](std::size_t dst, std::ptrdiff_t src) {
    if (src >= 0) cols[dst] = in[static_cast<std::size_t>(src)];
  });
  return cols;
}

void col2im_add(const ConvGeometry& g, std::span<const float> cols, std::span<float> in_grad) {
  for_each_tap(g, [&](std::size_t src, std::ptrdiff_t dst) {
    if (dst >= 0) in_grad[static_cast<std::size_t>(dst)] += cols[src];
  });
}

std::size_t window_argmax(const float* plane, std::size_t w, std::size_t y0, std::size_t x0, const Pair& k) {
  std::size_t best = y0 * w + x0;
  for (std::size_t dy = 0; dy < k[0]; ++dy)
    for (std::size_t dx = 0; dx < k[1]; ++dx) {
      const std::size_t idx = (y0 + dy) * w + x0 + dx;
      if (plane[idx] > plane[best]) best = idx;
    }
  return best;
}

}  // namespace camkit::detail
