#pragma once

// Independent reference implementations used only by tests. They work on
// plain double vectors with direct nested loops and share no code with the
// library's kernels.

#include <vector>

#include "camkit/evaluation.hpp"
#include "camkit/model.hpp"
#include "camkit/tensor.hpp"

namespace camkit::oracle {

struct Activation {
  Shape shape;
  std::vector<double> values;
};

/// Every layer output in double precision.
std::vector<Activation> naive_forward(const Model& model, const Tensor& input);

std::vector<double> naive_scores(const Model& model, const Tensor& input);

/// Σ_f G^f ⊙ A^f over [F, ...].
std::vector<double> naive_hirescam(const Tensor& a, const Tensor& g);

/// Σ_f mean(G^f) A^f over [F, ...].
std::vector<double> naive_gradcam(const Tensor& a, const Tensor& g);

double naive_iou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

struct BruteForceSweep {
  std::vector<std::size_t> classes;  // ascending
  std::vector<double> best_threshold;
  std::vector<double> best_mean_iou;
  double overall = 0.0;
};

/// Loops over (threshold, image) pairs with no shared state.
BruteForceSweep brute_force_sweep(const std::vector<SweepItem>& items, const std::vector<double>& grid);

}  // namespace camkit::oracle
