// Double-precision central-difference oracle. It has its own direct-loop
// forward pass so that it shares no arithmetic with the f32 engine it checks.

#include <variant>

#include "camkit/error.hpp"
#include "camkit/grad.hpp"

namespace camkit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

struct Activation {
  Shape shape;
  std::vector<double> data;
};

// Records which side of every kink the evaluation landed on.
using Pattern = std::vector<std::size_t>;

Activation run_layer(const Layer& layer, const Activation& in, Pattern& pattern) {
  return std::visit(
      Overloaded{
          [&](const Conv2d& c) {
            const Shape& ws = c.weight.shape();
            const std::size_t fo_n = ws[0], fi_n = ws[1], kh = ws[2], kw = ws[3];
            const std::size_t h = in.shape[1], w = in.shape[2];
            const std::size_t oh = window_output_size(h, kh, c.stride[0], c.padding[0]);
            const std::size_t ow = window_output_size(w, kw, c.stride[1], c.padding[1]);
            Activation out{{fo_n, oh, ow}, std::vector<double>(fo_n * oh * ow)};
            for (std::size_t fo = 0; fo < fo_n; ++fo)
              for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                  double acc = c.bias[fo];
                  for (std::size_t fi = 0; fi < fi_n; ++fi)
                    for (std::size_t ky = 0; ky < kh; ++ky)
                      for (std::size_t kx = 0; kx < kw; ++kx) {
                        const long y = static_cast<long>(oy * c.stride[0] + ky) - static_cast<long>(c.padding[0]);
                        const long x = static_cast<long>(ox * c.stride[1] + kx) - static_cast<long>(c.padding[1]);
                        if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) continue;
                        acc += static_cast<double>(c.weight[((fo * fi_n + fi) * kh + ky) * kw + kx]) *
                               in.data[(fi * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)];
                      }
                  out.data[(fo * oh + oy) * ow + ox] = acc;
                }
            return out;
          },
          [&](const ReLU&) {
            Activation out = in;
            for (double& v : out.data) {
              pattern.push_back(v > 0.0 ? 1 : 0);
              if (!(v > 0.0)) v = 0.0;
            }
            return out;
          },
          [&](const MaxPool2d& p) {
            const std::size_t c = in.shape[0], h = in.shape[1], w = in.shape[2];
            const std::size_t oh = window_output_size(h, p.kernel[0], p.stride[0], 0);
            const std::size_t ow = window_output_size(w, p.kernel[1], p.stride[1], 0);
            Activation out{{c, oh, ow}, std::vector<double>(c * oh * ow)};
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                  std::size_t best = (ch * h + y * p.stride[0]) * w + x * p.stride[1];
                  for (std::size_t dy = 0; dy < p.kernel[0]; ++dy)
                    for (std::size_t dx = 0; dx < p.kernel[1]; ++dx) {
                      const std::size_t idx = (ch * h + y * p.stride[0] + dy) * w + x * p.stride[1] + dx;
                      if (in.data[idx] > in.data[best]) best = idx;
                    }
                  pattern.push_back(best);
                  out.data[(ch * oh + y) * ow + x] = in.data[best];
                }
            return out;
          },
          [&](const AvgPool2d& p) {
            const std::size_t c = in.shape[0], h = in.shape[1], w = in.shape[2];
            const std::size_t oh = window_output_size(h, p.kernel[0], p.stride[0], 0);
            const std::size_t ow = window_output_size(w, p.kernel[1], p.stride[1], 0);
            Activation out{{c, oh, ow}, std::vector<double>(c * oh * ow)};
            for (std::size_t ch = 0; ch < c; ++ch)
              for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                  double acc = 0.0;
                  for (std::size_t dy = 0; dy < p.kernel[0]; ++dy)
                    for (std::size_t dx = 0; dx < p.kernel[1]; ++dx)
                      acc += in.data[(ch * h + y * p.stride[0] + dy) * w + x * p.stride[1] + dx];
                  out.data[(ch * oh + y) * ow + x] = acc / static_cast<double>(p.kernel[0] * p.kernel[1]);
                }
            return out;
          },
          [&](const GlobalAvgPool&) {
            const std::size_t c = in.shape[0], n = in.shape[1] * in.shape[2];
            Activation out{{c, 1, 1}, std::vector<double>(c)};
            for (std::size_t ch = 0; ch < c; ++ch) {
              double acc = 0.0;
              for (std::size_t i = 0; i < n; ++i) acc += in.data[ch * n + i];
              out.data[ch] = acc / static_cast<double>(n);
            }
            return out;
          },
          [&](const Flatten&) { return Activation{{in.data.size()}, in.data}; },
          [&](const Linear& l) {
            const std::size_t m = l.weight.dim(0), n = l.weight.dim(1);
            Activation out{{m}, std::vector<double>(m)};
            for (std::size_t i = 0; i < m; ++i) {
              double acc = l.bias[i];
              for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(l.weight[i * n + j]) * in.data[j];
              out.data[i] = acc;
            }
            return out;
          },
      },
      layer);
}

double score(const Model& model, std::size_t first, const Activation& start, std::size_t class_index,
             Pattern& pattern) {
  pattern.clear();
  Activation current = start;
  for (std::size_t i = first; i < model.layers().size(); ++i) current = run_layer(model.layer(i), current, pattern);
  return current.data[class_index];
}

}  // namespace

FiniteDifferenceResult finite_difference_oracle(const Model& model, const Tensor& input, std::size_t class_index,
                                                FdTarget target, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "finite-difference epsilon must be positive");
  if (class_index >= model.num_classes())
    throw Error(ErrorCode::kInvalidArgument, "class index " + std::to_string(class_index) + " out of range");

  Tensor point = input;
  std::size_t first = 0;
  if (target == FdTarget::kFeatureMaps) {
    const ForwardTrace trace = forward(model, input);
    point = trace.feature_maps();
    first = model.explanation_layer() + 1;
  } else {
    // Validates the input against the model before perturbing it.
    (void)forward(model, input);
  }

  Activation base{point.shape(), std::vector<double>(point.data().begin(), point.data().end())};
  Pattern base_pattern, plus_pattern, minus_pattern;
  score(model, first, base, class_index, base_pattern);

  FiniteDifferenceResult result;
  std::vector<float> grad(point.size());
  result.kink.assign(point.size(), 0);
  Activation probe = base;
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe.data[i] = base.data[i] + epsilon;
    const double up = score(model, first, probe, class_index, plus_pattern);
    probe.data[i] = base.data[i] - epsilon;
    const double down = score(model, first, probe, class_index, minus_pattern);
    probe.data[i] = base.data[i];
    grad[i] = static_cast<float>((up - down) / (2.0 * epsilon));
    if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
      result.kink[i] = 1;
      ++result.kink_count;
    }
  }
  result.gradient = Tensor(point.shape(), std::move(grad));
  return result;
}

}  // namespace camkit
