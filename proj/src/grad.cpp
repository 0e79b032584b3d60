#include "camkit/grad.hpp"

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

void check_request(const Model& model, const ForwardTrace& trace, std::size_t class_index) {
  if (class_index >= model.num_classes())
    throw Error(ErrorCode::kInvalidArgument, "class index " + std::to_string(class_index) + " out of range for " +
                                                 std::to_string(model.num_classes()) + " classes");
  if (trace.outputs.size() != model.layers().size() || trace.explanation_layer != model.explanation_layer())
    throw Error(ErrorCode::kInvalidArgument, "trace was not produced by this model");
  for (std::size_t i = 0; i < trace.outputs.size(); ++i)
    if (trace.outputs[i].shape() != infer_output_shape(model.layer(i), trace.layer_input(i).shape(), i))
      throw Error(ErrorCode::kInvalidArgument, "trace output " + std::to_string(i) + " does not match the model");
}

// ds_m / d(input of the score layer): row m of W, reshaped.
Tensor score_layer_gradient(const Model& model, const ForwardTrace& trace, std::size_t class_index) {
  const Linear& head = model.score_layer();
  const std::size_t n = head.weight.dim(1);
  const auto row = head.weight.data().subspan(class_index * n, n);
  return Tensor(trace.layer_input(model.layers().size() - 1).shape(), std::vector<float>(row.begin(), row.end()));
}

Tensor backprop_to(const Model& model, const ForwardTrace& trace, std::size_t class_index, std::size_t stop_layer) {
  Tensor grad = score_layer_gradient(model, trace, class_index);
  // grad now holds the gradient w.r.t. the output of layer (last - 1).
  for (std::size_t i = model.layers().size() - 1; i-- > stop_layer;)
    grad = backward_layer(model.layer(i), trace.layer_input(i), grad, i);
  return grad;
}

}  // namespace

Tensor backward_layer(const Layer& layer, const Tensor& layer_input, const Tensor& grad_output, std::size_t index) {
  const auto& kern = simd::active();
  const Shape& in_shape = layer_input.shape();
  const Shape expected_out = infer_output_shape(layer, in_shape, index);
  if (grad_output.shape() != expected_out)
    throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(index) + ": upstream gradient " +
                                               shape_to_string(grad_output.shape()) + " vs output " +
                                               shape_to_string(expected_out));
  const float* g = grad_output.data().data();
  const float* x = layer_input.data().data();

  return std::visit(
      Overloaded{
          [&](const Conv2d& conv) {
            const detail::ConvGeometry geo = detail::conv_geometry(conv, in_shape, expected_out);
            const std::size_t positions = geo.out_h * geo.out_w;
            std::vector<float> cols(positions * geo.patch, 0.0f);
            const float* w = conv.weight.data().data();
            for (std::size_t fo = 0; fo < geo.f_out; ++fo)
              for (std::size_t p = 0; p < positions; ++p) {
                const float gp = g[fo * positions + p];
                if (gp != 0.0f) kern.axpy(gp, w + fo * geo.patch, cols.data() + p * geo.patch, geo.patch);
              }
            std::vector<float> grad_in(layer_input.size(), 0.0f);
            detail::col2im_add(geo, cols, grad_in);
            return Tensor(in_shape, std::move(grad_in));
          },
          [&](const ReLU&) {
            std::vector<float> grad_in(layer_input.size());
            for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in[i] = x[i] > 0.0f ? g[i] : 0.0f;
            return Tensor(in_shape, std::move(grad_in));
          },
          [&](const MaxPool2d& p) {
            const std::size_t c = in_shape[0], h = in_shape[1], w = in_shape[2];
            const std::size_t oh = expected_out[1], ow = expected_out[2];
            std::vector<float> grad_in(layer_input.size(), 0.0f);
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t xo = 0; xo < ow; ++xo) {
                  const std::size_t win =
                      detail::window_argmax(x + ch * h * w, w, y * p.stride[0], xo * p.stride[1], p.kernel);
                  grad_in[ch * h * w + win] += g[(ch * oh + y) * ow + xo];
                }
            return Tensor(in_shape, std::move(grad_in));
          },
          [&](const AvgPool2d& p) {
            const std::size_t c = in_shape[0], h = in_shape[1], w = in_shape[2];
            const std::size_t oh = expected_out[1], ow = expected_out[2];
            const float count = static_cast<float>(p.kernel[0] * p.kernel[1]);
            std::vector<float> grad_in(layer_input.size(), 0.0f);
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t xo = 0; xo < ow; ++xo) {
                  const float share = g[(ch * oh + y) * ow + xo] / count;
                  for (std::size_t dy = 0; dy < p.kernel[0]; ++dy)
                    for (std::size_t dx = 0; dx < p.kernel[1]; ++dx)
                      grad_in[ch * h * w + (y * p.stride[0] + dy) * w + xo * p.stride[1] + dx] += share;
                }
            return Tensor(in_shape, std::move(grad_in));
          },
          [&](const GlobalAvgPool&) {
            const std::size_t c = in_shape[0], n = in_shape[1] * in_shape[2];
            const float count = static_cast<float>(n);
            std::vector<float> grad_in(layer_input.size());
            for (std::size_t ch = 0; ch < c; ++ch) {
              const float share = g[ch] / count;
              std::fill(grad_in.begin() + ch * n, grad_in.begin() + (ch + 1) * n, share);
            }
            return Tensor(in_shape, std::move(grad_in));
          },
          [&](const Flatten&) { return grad_output.reshaped(in_shape); },
          [&](const Linear& l) {
            const std::size_t m = l.weight.dim(0), n = l.weight.dim(1);
            std::vector<float> grad_in(n, 0.0f);
            for (std::size_t i = 0; i < m; ++i)
              if (g[i] != 0.0f) kern.axpy(g[i], l.weight.data().data() + i * n, grad_in.data(), n);
            return Tensor(in_shape, std::move(grad_in));
          },
      },
      layer);
}

ScoreGradient grad_wrt_feature_maps(const Model& model, const ForwardTrace& trace, std::size_t class_index) {
  check_request(model, trace, class_index);
  return ScoreGradient{class_index, backprop_to(model, trace, class_index, model.explanation_layer() + 1),
                       std::nullopt};
}

ScoreGradient grad_wrt_input(const Model& model, const ForwardTrace& trace, std::size_t class_index) {
  check_request(model, trace, class_index);
  ScoreGradient out{class_index, backprop_to(model, trace, class_index, model.explanation_layer() + 1),
                    std::nullopt};
  Tensor grad = out.grad_feature_maps;
  for (std::size_t i = model.explanation_layer() + 1; i-- > 0;)
    grad = backward_layer(model.layer(i), trace.layer_input(i), grad, i);
  out.grad_input = std::move(grad);
  return out;
}

}  // namespace camkit
