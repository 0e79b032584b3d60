#include "camkit/forward.hpp"

#include <variant>

#include "camkit/error.hpp"
#include "camkit/simd/kernels.hpp"
#include "layer_kernels.hpp"

namespace camkit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Tensor conv_forward(const Conv2d& conv, const Tensor& in, const Shape& out_shape) {
  const auto& kern = simd::active();
  const detail::ConvGeometry g = detail::conv_geometry(conv, in.shape(), out_shape);
  const std::size_t positions = g.out_h * g.out_w;
  std::vector<float> cols = detail::im2col(g, in.data());
  std::vector<float> out(g.f_out * positions);
  const float* w = conv.weight.data().data();
  for (std::size_t fo = 0; fo < g.f_out; ++fo) {
    const double b = conv.bias[fo];
    for (std::size_t p = 0; p < positions; ++p)
      out[fo * positions + p] = static_cast<float>(kern.dot(w + fo * g.patch, cols.data() + p * g.patch, g.patch) + b);
  }
  return Tensor(out_shape, std::move(out));
}

template <class Reduce>
Tensor pool_forward(const Pair& kernel, const Pair& stride, const Tensor& in, const Shape& out_shape, Reduce reduce) {
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  const std::size_t oh = out_shape[1], ow = out_shape[2];
  std::vector<float> out(c * oh * ow);
  const float* src = in.data().data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x)
        out[(ch * oh + y) * ow + x] = reduce(src + ch * h * w, w, y * stride[0], x * stride[1], kernel);
  return Tensor(out_shape, std::move(out));
}

}  // namespace

Tensor apply_layer(const Layer& layer, const Tensor& in, std::size_t index) {
  const Shape out_shape = infer_output_shape(layer, in.shape(), index);
  const auto& kern = simd::active();
  return std::visit(
      Overloaded{
          [&](const Conv2d& c) { return conv_forward(c, in, out_shape); },
          [&](const ReLU&) { return relu(in); },
          [&](const MaxPool2d& p) {
            return pool_forward(p.kernel, p.stride, in, out_shape,
                                [](const float* plane, std::size_t w, std::size_t y0, std::size_t x0, const Pair& k) {
                                  return plane[detail::window_argmax(plane, w, y0, x0, k)];
                                });
          },
          [&](const AvgPool2d& p) {
            return pool_forward(p.kernel, p.stride, in, out_shape,
                                [](const float* plane, std::size_t w, std::size_t y0, std::size_t x0, const Pair& k) {
                                  double acc = 0.0;
                                  for (std::size_t dy = 0; dy < k[0]; ++dy)
                                    for (std::size_t dx = 0; dx < k[1]; ++dx) acc += plane[(y0 + dy) * w + x0 + dx];
                                  return static_cast<float>(acc / static_cast<double>(k[0] * k[1]));
                                });
          },
          [&](const GlobalAvgPool&) {
            const std::size_t c = in.dim(0), n = in.dim(1) * in.dim(2);
            std::vector<float> out(c);
            for (std::size_t ch = 0; ch < c; ++ch)
              out[ch] = static_cast<float>(kern.sum(in.data().data() + ch * n, n) / static_cast<double>(n));
            return Tensor(out_shape, std::move(out));
          },
          [&](const Flatten&) { return in.reshaped(out_shape); },
          [&](const Linear& l) {
            const std::size_t m = l.weight.dim(0), n = l.weight.dim(1);
            std::vector<float> out(m);
            for (std::size_t i = 0; i < m; ++i)
              out[i] = static_cast<float>(kern.dot(l.weight.data().data() + i * n, in.data().data(), n) +
                                          static_cast<double>(l.bias[i]));
            return Tensor(out_shape, std::move(out));
          },
      },
      layer);
}

ForwardTrace forward(const Model& model, const Tensor& input) {
  ForwardTrace trace;
  trace.input = input;
  trace.explanation_layer = model.explanation_layer();
  trace.outputs.reserve(model.layers().size());
  for (std::size_t i = 0; i < model.layers().size(); ++i)
    trace.outputs.push_back(apply_layer(model.layer(i), trace.layer_input(i), i));
  return trace;
}

Tensor forward_from(const Model& model, std::size_t first, const Tensor& activation) {
  Tensor current = activation;
  for (std::size_t i = first; i < model.layers().size(); ++i) current = apply_layer(model.layer(i), current, i);
  return current;
}

}  // namespace camkit
