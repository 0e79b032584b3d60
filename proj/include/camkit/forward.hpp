#pragma once

#include <vector>

#include "camkit/model.hpp"
#include "camkit/tensor.hpp"

namespace camkit {

/// Every activation of one forward pass. outputs[i] is the output of layer i;
/// the input of layer i is outputs[i - 1] (or `input` for i == 0).
struct ForwardTrace {
  Tensor input;
  std::vector<Tensor> outputs;
  std::size_t explanation_layer = 0;

  const Tensor& layer_input(std::size_t i) const { return i == 0 ? input : outputs.at(i - 1); }
  /// A, shape [F, D1, D2].
  const Tensor& feature_maps() const { return outputs.at(explanation_layer); }
  /// Raw class scores (no softmax or sigmoid), shape [M].
  const Tensor& scores() const { return outputs.back(); }
};

ForwardTrace forward(const Model& model, const Tensor& input);

/// Applies a single layer. `index` only labels error messages.
Tensor apply_layer(const Layer& layer, const Tensor& in, std::size_t index);

/// Runs layers [first, end) starting from `activation` and returns the scores.
Tensor forward_from(const Model& model, std::size_t first, const Tensor& activation);

}  // namespace camkit
