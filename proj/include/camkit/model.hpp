#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "camkit/tensor.hpp"

namespace camkit {

using Pair = std::array<std::size_t, 2>;

/// weight [F_out, F_in, K_h, K_w], bias [F_out]; zero padding only.
struct Conv2d {
  Tensor weight;
  Tensor bias;
  Pair stride{1, 1};
  Pair padding{0, 0};
};

struct ReLU {};

struct MaxPool2d {
  Pair kernel{2, 2};
  Pair stride{2, 2};
};

struct AvgPool2d {
  Pair kernel{2, 2};
  Pair stride{2, 2};
};

/// Averages each [D1, D2] map to one value; output [F, 1, 1].
struct GlobalAvgPool {};

struct Flatten {};

/// weight [M, N], bias [M]. Inputs of any rank are read in row-major order.
struct Linear {
  Tensor weight;
  Tensor bias;
};

using Layer = std::variant<Conv2d, ReLU, MaxPool2d, AvgPool2d, GlobalAvgPool, Flatten, Linear>;

enum class LayerKind { kConv2d, kReLU, kMaxPool2d, kAvgPool2d, kGlobalAvgPool, kFlatten, kLinear };

LayerKind kind_of(const Layer& layer);
std::string_view kind_name(LayerKind kind);
LayerKind kind_from_name(std::string_view name);

enum class Architecture {
  kCam,           // explanation conv -> global average pool -> (flatten) -> linear
  kSingleFcHead,  // explanation conv -> (flatten) -> linear
  kOther,
};

std::string_view architecture_name(Architecture arch);

/// Output spatial size of a window op: floor((d + 2p - k) / s) + 1.
std::size_t window_output_size(std::size_t d, std::size_t k, std::size_t s, std::size_t p);

/// Sequential CNN with a designated explanation layer. Construction validates
/// every layer against the declared input shape, so a Model that exists is
/// always runnable on inputs of that shape. Immutable afterwards.
class Model {
 public:
  Model(std::vector<Layer> layers, std::size_t explanation_layer, std::vector<std::string> class_names,
        Shape input_shape);

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t explanation_layer() const noexcept { return explanation_layer_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::size_t num_classes() const noexcept { return class_names_.size(); }
  const Shape& input_shape() const noexcept { return input_shape_; }

  /// Output shape of layer i for the declared input shape.
  const Shape& output_shape(std::size_t i) const { return shapes_.at(i); }
  /// Shape of A, the explanation layer's output: [F, D1, D2].
  const Shape& feature_map_shape() const { return shapes_.at(explanation_layer_); }

  const Linear& score_layer() const;

  /// Resolves a class by name; throws kInvalidArgument when absent.
  std::size_t class_index(std::string_view name) const;

  /// Copy with b[class_index] += delta in the score layer.
  Model with_score_bias_shift(std::size_t class_index, float delta) const;

 private:
  std::vector<Layer> layers_;
  std::size_t explanation_layer_;
  std::vector<std::string> class_names_;
  Shape input_shape_;
  std::vector<Shape> shapes_;
};

/// Shape produced by `layer` (at position `index`, for messages) given `in`.
/// Throws kShapeMismatch naming the layer index when incompatible.
Shape infer_output_shape(const Layer& layer, const Shape& in, std::size_t index);

Architecture classify_architecture(const Model& model);

}  // namespace camkit
