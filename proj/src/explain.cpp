#include "camkit/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camkit/error.hpp"
#include "camkit/simd/kernels.hpp"

namespace camkit {

namespace {

Shape spatial_shape(const Tensor& feature_maps) {
  if (feature_maps.rank() < 2)
    throw Error(ErrorCode::kShapeMismatch, "feature maps must be [F, ...spatial], got " +
                                               shape_to_string(feature_maps.shape()));
  return Shape(feature_maps.shape().begin() + 1, feature_maps.shape().end());
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": " + shape_to_string(a.shape()) + " vs " +
                                               shape_to_string(b.shape()));
}

// out = sum_f coef[f] * A^f, accumulated in feature order.
Tensor weighted_feature_sum(const Tensor& feature_maps, std::span<const float> coef) {
  const Shape spatial = spatial_shape(feature_maps);
  const std::size_t n = shape_size(spatial);
  std::vector<float> out(n, 0.0f);
  const auto& kern = simd::active();
  for (std::size_t f = 0; f < coef.size(); ++f) kern.axpy(coef[f], feature_maps.data().data() + f * n, out.data(), n);
  return Tensor(spatial, std::move(out));
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kCam: return "cam";
    case Method::kGradCam: return "gradcam";
    case Method::kHiResCam: return "hirescam";
    case Method::kGradientXInput: return "gradxinput";
  }
  return "?";
}

Method method_from_name(std::string_view name) {
  for (Method m : {Method::kCam, Method::kGradCam, Method::kHiResCam, Method::kGradientXInput})
    if (method_name(m) == name) return m;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown method '" + std::string(name) + "' (expected cam, gradcam, hirescam or gradxinput)");
}

std::string_view upsample_mode_name(UpsampleMode mode) {
  return mode == UpsampleMode::kNearest ? "nearest" : "bilinear";
}

UpsampleMode upsample_mode_from_name(std::string_view name) {
  if (name == "nearest") return UpsampleMode::kNearest;
  if (name == "bilinear") return UpsampleMode::kBilinear;
  throw Error(ErrorCode::kInvalidArgument, "unknown upsample mode '" + std::string(name) + "'");
}

ImportanceWeights gradcam_weights(const Tensor& grad_feature_maps) {
  const std::size_t rank = grad_feature_maps.rank();
  if (rank < 2)
    throw Error(ErrorCode::kShapeMismatch, "gradient must be [F, ...spatial], got " +
                                               shape_to_string(grad_feature_maps.shape()));
  std::vector<std::size_t> axes(rank - 1);
  std::iota(axes.begin(), axes.end(), std::size_t{1});
  return ImportanceWeights{reduce_mean(grad_feature_maps, axes)};
}

Tensor gradcam(const Tensor& feature_maps, const Tensor& grad_feature_maps) {
  require_same(feature_maps, grad_feature_maps, "gradcam");
  const ImportanceWeights w = gradcam_weights(grad_feature_maps);
  return weighted_feature_sum(feature_maps, w.alpha.data());
}

Tensor hirescam(const Tensor& feature_maps, const Tensor& grad_feature_maps) {
  require_same(feature_maps, grad_feature_maps, "hirescam");
  const Shape spatial = spatial_shape(feature_maps);
  const std::size_t n = shape_size(spatial);
  std::vector<float> out(n, 0.0f);
  const auto& kern = simd::active();
  for (std::size_t f = 0; f < feature_maps.dim(0); ++f)
    kern.mul_acc(grad_feature_maps.data().data() + f * n, feature_maps.data().data() + f * n, out.data(), n);
  return Tensor(spatial, std::move(out));
}

Tensor cam(const Tensor& feature_maps, const Tensor& class_weights) {
  if (class_weights.rank() != 1 || feature_maps.rank() < 2 || class_weights.dim(0) != feature_maps.dim(0))
    throw Error(ErrorCode::kShapeMismatch, "cam: weights " + shape_to_string(class_weights.shape()) +
                                               " do not match feature maps " +
                                               shape_to_string(feature_maps.shape()));
  return weighted_feature_sum(feature_maps, class_weights.data());
}

Tensor cam(const Model& model, const ForwardTrace& trace, std::size_t class_index) {
  const Architecture arch = classify_architecture(model);
  if (arch != Architecture::kCam)
    throw Error(ErrorCode::kUnsupportedArchitecture,
                "CAM requires a CamArchitecture model (conv -> global average pool -> linear); this model is " +
                    std::string(architecture_name(arch)));
  if (class_index >= model.num_classes())
    throw Error(ErrorCode::kInvalidArgument, "class index " + std::to_string(class_index) + " out of range");
  const Tensor& w = model.score_layer().weight;
  const std::size_t f = w.dim(1);
  const auto row = w.data().subspan(class_index * f, f);
  return cam(trace.feature_maps(), Tensor({f}, std::vector<float>(row.begin(), row.end())));
}

Tensor gradient_x_input(const Tensor& input, const Tensor& grad_input) {
  require_same(input, grad_input, "gradient_x_input");
  return hirescam(input, grad_input);
}

Tensor postprocess(const Tensor& raw) {
  const Tensor positive = relu(raw);
  const float peak = positive.empty() ? 0.0f : max_value(positive);
  if (!(peak > 0.0f)) return Tensor::zeros(raw.shape());
  std::vector<float> out(positive.data().begin(), positive.data().end());
  for (float& v : out) v /= peak;
  return Tensor(raw.shape(), std::move(out));
}

Tensor upsample(const Tensor& map, std::size_t height, std::size_t width, UpsampleMode mode) {
  if (map.rank() != 2) throw Error(ErrorCode::kShapeMismatch, "upsample expects a 2-D map");
  const std::size_t d1 = map.dim(0), d2 = map.dim(1);
  if (height < d1 || width < d2)
    throw Error(ErrorCode::kInvalidArgument, "upsample target " + shape_to_string({height, width}) +
                                                 " is smaller than source " + shape_to_string(map.shape()));
  std::vector<float> out(height * width);
  if (mode == UpsampleMode::kNearest) {
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) out[y * width + x] = map[(y * d1 / height) * d2 + x * d2 / width];
    return Tensor({height, width}, std::move(out));
  }

  // Align-corners-false: target pixel centre i maps to (i + 0.5) * D / H - 0.5.
  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t dst, std::size_t src) {
    std::vector<Tap> t(dst);
    for (std::size_t i = 0; i < dst; ++i) {
      double pos = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      t[i] = Tap{lo, std::min(lo + 1, src - 1), pos - static_cast<double>(lo)};
    }
    return t;
  };
  const auto ty = taps(height, d1), tx = taps(width, d2);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double top = (1.0 - tx[x].frac) * map[ty[y].lo * d2 + tx[x].lo] + tx[x].frac * map[ty[y].lo * d2 + tx[x].hi];
      const double bot = (1.0 - tx[x].frac) * map[ty[y].hi * d2 + tx[x].lo] + tx[x].frac * map[ty[y].hi * d2 + tx[x].hi];
      out[y * width + x] = static_cast<float>((1.0 - ty[y].frac) * top + ty[y].frac * bot);
    }
  return Tensor({height, width}, std::move(out));
}

std::vector<FeatureContribution> decompose_topk(const Tensor& feature_maps, const Tensor& grad_feature_maps,
                                                Method method, std::size_t k) {
  require_same(feature_maps, grad_feature_maps, "decompose_topk");
  const Shape spatial = spatial_shape(feature_maps);
  const std::size_t features = feature_maps.dim(0), n = shape_size(spatial);
  if (k < 1 || k > features)
    throw Error(ErrorCode::kInvalidArgument,
                "decompose k = " + std::to_string(k) + " must be in [1, " + std::to_string(features) + "]");
  if (method != Method::kHiResCam && method != Method::kGradCam)
    throw Error(ErrorCode::kInvalidArgument, "decompose supports hirescam and gradcam only");

  const auto& kern = simd::active();
  const Tensor alpha = method == Method::kGradCam ? gradcam_weights(grad_feature_maps).alpha : Tensor{};
  std::vector<FeatureContribution> all;
  all.reserve(features);
  for (std::size_t f = 0; f < features; ++f) {
    std::vector<float> map(n);
    const float* a = feature_maps.data().data() + f * n;
    if (method == Method::kHiResCam)
      kern.mul(grad_feature_maps.data().data() + f * n, a, map.data(), n);
    else
      kern.scale(a, alpha[f], map.data(), n);
    const float mean = static_cast<float>(kern.sum(map.data(), n) / static_cast<double>(n));
    all.push_back(FeatureContribution{f, Tensor(spatial, std::move(map)), mean});
  }
  std::stable_sort(all.begin(), all.end(), [](const FeatureContribution& a, const FeatureContribution& b) {
    return a.mean_contribution > b.mean_contribution;
  });
  all.resize(k);
  return all;
}

AttentionMap explain(const Model& model, const ForwardTrace& trace, const ScoreGradient& gradient, Method method,
                     UpsampleMode mode) {
  AttentionMap out;
  out.method = method;
  out.class_index = gradient.class_index;
  switch (method) {
    case Method::kCam: out.raw = cam(model, trace, gradient.class_index); break;
    case Method::kGradCam: out.raw = gradcam(trace.feature_maps(), gradient.grad_feature_maps); break;
    case Method::kHiResCam: out.raw = hirescam(trace.feature_maps(), gradient.grad_feature_maps); break;
    case Method::kGradientXInput:
      if (!gradient.grad_input)
        throw Error(ErrorCode::kInvalidArgument, "gradxinput needs a gradient from grad_wrt_input");
      out.raw = gradient_x_input(trace.input, *gradient.grad_input);
      break;
  }
  out.processed = postprocess(out.raw);
  out.upsampled = upsample(out.processed, trace.input.dim(1), trace.input.dim(2), mode);
  return out;
}

AttentionMap explain(const Model& model, const ForwardTrace& trace, std::size_t class_index, Method method,
                     UpsampleMode mode) {
  const ScoreGradient g = method == Method::kGradientXInput ? grad_wrt_input(model, trace, class_index)
                                                            : grad_wrt_feature_maps(model, trace, class_index);
  return explain(model, trace, g, method, mode);
}

}  // namespace camkit
