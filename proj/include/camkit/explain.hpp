#pragma once

#include <string_view>
#include <vector>

#include "camkit/forward.hpp"
#include "camkit/grad.hpp"
#include "camkit/model.hpp"
#include "camkit/tensor.hpp"

namespace camkit {

enum class Method { kCam, kGradCam, kHiResCam, kGradientXInput };

std::string_view method_name(Method method);  // "cam", "gradcam", "hirescam", "gradxinput"
Method method_from_name(std::string_view name);

enum class UpsampleMode { kNearest, kBilinear };

std::string_view upsample_mode_name(UpsampleMode mode);
UpsampleMode upsample_mode_from_name(std::string_view name);

struct AttentionMap {
  Method method = Method::kHiResCam;
  std::size_t class_index = 0;
  Tensor raw;        // [D1, D2] at the explanation layer, [H, W] for gradxinput
  Tensor processed;  // relu then divide by max, values in [0, 1]
  Tensor upsampled;  // [H, W] of the model input
};

struct ImportanceWeights {
  Tensor alpha;  // [F]
};

struct FeatureContribution {
  std::size_t feature = 0;
  Tensor contribution_map;
  float mean_contribution = 0.0f;
};

/// Spatial mean of each gradient map; grad_A is [F, ...spatial].
ImportanceWeights gradcam_weights(const Tensor& grad_feature_maps);

/// sum_f alpha_f A^f.
Tensor gradcam(const Tensor& feature_maps, const Tensor& grad_feature_maps);

/// sum_f (dA^f ⊙ A^f) over any number of trailing spatial axes.
Tensor hirescam(const Tensor& feature_maps, const Tensor& grad_feature_maps);

/// sum_f w_f A^f with w the class row of the score layer ([F]).
Tensor cam(const Tensor& feature_maps, const Tensor& class_weights);

/// Checks the architecture, then applies cam() with row m of the score layer.
Tensor cam(const Model& model, const ForwardTrace& trace, std::size_t class_index);

/// sum_c (dX_c ⊙ X_c) for an input [C, H, W]; result [H, W].
Tensor gradient_x_input(const Tensor& input, const Tensor& grad_input);

/// relu, then divide by the maximum. All-zero when nothing is positive.
Tensor postprocess(const Tensor& raw);

Tensor upsample(const Tensor& map, std::size_t height, std::size_t width, UpsampleMode mode = UpsampleMode::kBilinear);

/// Per-feature terms of a HiResCAM or Grad-CAM map, highest mean first
/// (ties by ascending feature index), truncated to k entries.
std::vector<FeatureContribution> decompose_topk(const Tensor& feature_maps, const Tensor& grad_feature_maps,
                                                Method method, std::size_t k);

/// Runs one method end to end. `gradient` must come from grad_wrt_input when
/// the method is gradxinput.
AttentionMap explain(const Model& model, const ForwardTrace& trace, const ScoreGradient& gradient, Method method,
                     UpsampleMode mode = UpsampleMode::kBilinear);

/// Convenience overload that computes the gradient it needs.
AttentionMap explain(const Model& model, const ForwardTrace& trace, std::size_t class_index, Method method,
                     UpsampleMode mode = UpsampleMode::kBilinear);

}  // namespace camkit
