#include "camkit/model.hpp"

#include <algorithm>

#include "camkit/error.hpp"

namespace camkit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void layer_error(std::size_t index, std::string_view kind, const std::string& msg) {
  throw Error(ErrorCode::kShapeMismatch,
              "layer " + std::to_string(index) + " (" + std::string(kind) + "): " + msg);
}

void check_pair_positive(const Pair& p, std::size_t index, std::string_view kind, const char* what) {
  if (p[0] == 0 || p[1] == 0)
    throw Error(ErrorCode::kInvalidModel,
                "layer " + std::to_string(index) + " (" + std::string(kind) + "): " + what + " must be positive");
}

Shape window_shape(const Shape& in, std::size_t channels_out, const Pair& kernel, const Pair& stride,
                   const Pair& padding, std::size_t index, std::string_view kind) {
  if (in.size() != 3) layer_error(index, kind, "expects [C, H, W] input, got " + shape_to_string(in));
  Shape out{channels_out, 0, 0};
  for (int a = 0; a < 2; ++a) {
    const std::size_t d = in[1 + a] + 2 * padding[a];
    if (kernel[a] > d)
      layer_error(index, kind, "kernel " + std::to_string(kernel[a]) + " larger than padded input " +
                                   std::to_string(d));
    out[1 + a] = window_output_size(in[1 + a], kernel[a], stride[a], padding[a]);
  }
  return out;
}

}  // namespace

LayerKind kind_of(const Layer& layer) { return static_cast<LayerKind>(layer.index()); }

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "Conv2d";
    case LayerKind::kReLU: return "ReLU";
    case LayerKind::kMaxPool2d: return "MaxPool2d";
    case LayerKind::kAvgPool2d: return "AvgPool2d";
    case LayerKind::kGlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::kFlatten: return "Flatten";
    case LayerKind::kLinear: return "Linear";
  }
  return "?";
}

LayerKind kind_from_name(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(LayerKind::kLinear); ++k)
    if (kind_name(static_cast<LayerKind>(k)) == name) return static_cast<LayerKind>(k);
  throw Error(ErrorCode::kUnsupportedLayer, "unknown layer kind '" + std::string(name) + "'");
}

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::kCam: return "CamArchitecture";
    case Architecture::kSingleFcHead: return "SingleFcHead";
    case Architecture::kOther: return "Other";
  }
  return "?";
}

std::size_t window_output_size(std::size_t d, std::size_t k, std::size_t s, std::size_t p) {
  return (d + 2 * p - k) / s + 1;
}

Shape infer_output_shape(const Layer& layer, const Shape& in, std::size_t index) {
  const std::string_view kind = kind_name(kind_of(layer));
  return std::visit(
      Overloaded{
          [&](const Conv2d& c) {
            const Shape& w = c.weight.shape();
            if (w.size() != 4) layer_error(index, kind, "weight must be [F_out, F_in, K_h, K_w]");
            if (c.bias.shape() != Shape{w[0]})
              layer_error(index, kind, "bias " + shape_to_string(c.bias.shape()) + " does not match F_out " +
                                           std::to_string(w[0]));
            check_pair_positive(c.stride, index, kind, "stride");
            if (in.size() != 3 || in[0] != w[1])
              layer_error(index, kind, "input " + shape_to_string(in) + " does not have F_in = " +
                                           std::to_string(w[1]) + " channels");
            return window_shape(in, w[0], {w[2], w[3]}, c.stride, c.padding, index, kind);
          },
          [&](const ReLU&) { return in; },
          [&](const MaxPool2d& p) {
            check_pair_positive(p.kernel, index, kind, "kernel");
            check_pair_positive(p.stride, index, kind, "stride");
            return window_shape(in, in.empty() ? 0 : in[0], p.kernel, p.stride, {0, 0}, index, kind);
          },
          [&](const AvgPool2d& p) {
            check_pair_positive(p.kernel, index, kind, "kernel");
            check_pair_positive(p.stride, index, kind, "stride");
            return window_shape(in, in.empty() ? 0 : in[0], p.kernel, p.stride, {0, 0}, index, kind);
          },
          [&](const GlobalAvgPool&) {
            if (in.size() != 3) layer_error(index, kind, "expects [C, H, W] input, got " + shape_to_string(in));
            return Shape{in[0], 1, 1};
          },
          [&](const Flatten&) { return Shape{shape_size(in)}; },
          [&](const Linear& l) {
            const Shape& w = l.weight.shape();
            if (w.size() != 2) layer_error(index, kind, "weight must be [M, N]");
            if (l.bias.shape() != Shape{w[0]})
              layer_error(index, kind, "bias " + shape_to_string(l.bias.shape()) + " does not match M " +
                                           std::to_string(w[0]));
            if (shape_size(in) != w[1])
              layer_error(index, kind, "input " + shape_to_string(in) + " has " + std::to_string(shape_size(in)) +
                                           " elements, weight expects " + std::to_string(w[1]));
            return Shape{w[0]};
          },
      },
      layer);
}

Model::Model(std::vector<Layer> layers, std::size_t explanation_layer, std::vector<std::string> class_names,
             Shape input_shape)
    : layers_(std::move(layers)),
      explanation_layer_(explanation_layer),
      class_names_(std::move(class_names)),
      input_shape_(std::move(input_shape)) {
  if (layers_.empty()) throw Error(ErrorCode::kInvalidModel, "model has no layers");
  if (explanation_layer_ >= layers_.size() || kind_of(layers_[explanation_layer_]) != LayerKind::kConv2d)
    throw Error(ErrorCode::kInvalidModel,
                "explanation_layer " + std::to_string(explanation_layer_) + " is not a Conv2d layer");
  if (kind_of(layers_.back()) != LayerKind::kLinear)
    throw Error(ErrorCode::kInvalidModel, "final layer must be Linear");
  if (input_shape_.size() != 3 || shape_size(input_shape_) == 0)
    throw Error(ErrorCode::kInvalidModel, "input_shape must be [C, H, W] with positive sizes");

  Shape current = input_shape_;
  try {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      current = infer_output_shape(layers_[i], current, i);
      shapes_.push_back(current);
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidModel, e.what());
  }
  if (class_names_.size() != shapes_.back()[0])
    throw Error(ErrorCode::kInvalidModel, std::to_string(class_names_.size()) + " class names for " +
                                              std::to_string(shapes_.back()[0]) + " scores");
}

const Linear& Model::score_layer() const { return std::get<Linear>(layers_.back()); }

std::size_t Model::class_index(std::string_view name) const {
  auto it = std::find(class_names_.begin(), class_names_.end(), name);
  if (it == class_names_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown class '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - class_names_.begin());
}

Model Model::with_score_bias_shift(std::size_t class_index, float delta) const {
  if (class_index >= num_classes())
    throw Error(ErrorCode::kInvalidArgument, "class index " + std::to_string(class_index) + " out of range");
  std::vector<Layer> layers = layers_;
  Linear& head = std::get<Linear>(layers.back());
  std::vector<float> bias(head.bias.data().begin(), head.bias.data().end());
  bias[class_index] += delta;
  head.bias = Tensor(head.bias.shape(), std::move(bias));
  return Model(std::move(layers), explanation_layer_, class_names_, input_shape_);
}

Architecture classify_architecture(const Model& model) {
  const auto& layers = model.layers();
  std::vector<LayerKind> suffix;
  for (std::size_t i = model.explanation_layer() + 1; i < layers.size(); ++i) suffix.push_back(kind_of(layers[i]));

  auto is_full_map_pool = [&](std::size_t offset) {
    const std::size_t i = model.explanation_layer() + 1 + offset;
    if (suffix[offset] == LayerKind::kGlobalAvgPool) return true;
    if (suffix[offset] != LayerKind::kAvgPool2d) return false;
    const auto& pool = std::get<AvgPool2d>(layers[i]);
    const Shape& in = model.output_shape(i - 1);
    return pool.kernel[0] == in[1] && pool.kernel[1] == in[2];
  };

  using K = LayerKind;
  if (suffix == std::vector<K>{K::kFlatten, K::kLinear} || suffix == std::vector<K>{K::kLinear})
    return Architecture::kSingleFcHead;
  if ((suffix.size() == 2 && suffix[1] == K::kLinear && is_full_map_pool(0)) ||
      (suffix.size() == 3 && suffix[1] == K::kFlatten && suffix[2] == K::kLinear && is_full_map_pool(0)))
    return Architecture::kCam;
  return Architecture::kOther;
}

}  // namespace camkit
