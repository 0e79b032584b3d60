#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "camkit/forward.hpp"
#include "camkit/model.hpp"

namespace camkit {

struct ScoreGradient {
  std::size_t class_index = 0;
  Tensor grad_feature_maps;           // ds_m/dA, same shape as A
  std::optional<Tensor> grad_input;   // ds_m/dX, only from grad_wrt_input
};

/// Backpropagates s_m through the layers after the explanation layer only.
/// The score layer contributes row m of its weight matrix verbatim, so for a
/// single-FC head the result is a bit-exact reshape of that row.
ScoreGradient grad_wrt_feature_maps(const Model& model, const ForwardTrace& trace, std::size_t class_index);

/// Full backward pass down to the input; also fills grad_feature_maps.
ScoreGradient grad_wrt_input(const Model& model, const ForwardTrace& trace, std::size_t class_index);

/// Gradient w.r.t. the input of layer `index`, given the gradient w.r.t. its
/// output. ReLU passes gradient where the input is strictly positive; max
/// pooling routes to the first maximum in row-major order.
Tensor backward_layer(const Layer& layer, const Tensor& layer_input, const Tensor& grad_output, std::size_t index);

enum class FdTarget { kFeatureMaps, kInput };

inline constexpr double kDefaultFdEpsilon = 1e-2;

struct FiniteDifferenceResult {
  Tensor gradient;
  /// 1 where the +eps/-eps evaluations saw a different ReLU sign pattern or
  /// max-pool winner than the unperturbed point.
  std::vector<std::uint8_t> kink;
  std::size_t kink_count = 0;
};

/// Central differences (s_m(x + eps e_i) - s_m(x - eps e_i)) / 2 eps, one
/// element at a time. Evaluation runs in double precision through its own
/// direct-loop forward pass, independent of the f32 engine. For the
/// feature-map target the perturbation is applied to the cached A from a
/// forward pass and only the layers after the explanation layer are re-run.
FiniteDifferenceResult finite_difference_oracle(const Model& model, const Tensor& input, std::size_t class_index,
                                                FdTarget target, double epsilon = kDefaultFdEpsilon);

}  // namespace camkit
