#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "camkit/explain.hpp"
#include "camkit/forward.hpp"
#include "camkit/imaging.hpp"
#include "camkit/model.hpp"

namespace camkit {

// ---------------------------------------------------------------------------
// Faithfulness

/// Exact per-location contributions to s_m - b_m: sum_f (w_m ⊙ A)_f, with w_m
/// the score-layer row laid out as [F, D1, D2] (single-FC head) or spread as
/// w_m^f / (D1 D2) over each map (CAM architecture). Other architectures have
/// no such decomposition and are rejected.
Tensor ground_truth_locations(const Model& model, const ForwardTrace& trace, std::size_t class_index);

/// |sum(raw_hirescam) + b_m - s_m|, evaluated in double.
double score_decomposition_residual(const Model& model, const ForwardTrace& trace, std::size_t class_index,
                                    const Tensor& raw_hirescam);

/// Euclidean distance sqrt(sum (e_i - g_i)^2), unnormalised.
double l2_faithfulness(const Tensor& explanation, const Tensor& ground_truth);

/// Processed-and-upsampled ground truth, through the same pipeline as the
/// explanations.
Tensor processed_ground_truth(const Model& model, const ForwardTrace& trace, std::size_t class_index,
                              UpsampleMode mode);

struct CamEquivalence {
  float hirescam_vs_gradcam = 0.0f;      // max |raw difference|
  float cam_vs_scaled_hirescam = 0.0f;   // max |raw_cam - D1 D2 raw_hirescam|
  float processed_max_diff = 0.0f;       // max over the three processed pairs
  bool equivalent = false;
};

CamEquivalence cam_equivalence(const Model& model, const ForwardTrace& trace, std::size_t class_index, float tol);
bool check_cam_equivalence(const Model& model, const ForwardTrace& trace, std::size_t class_index, float tol);

struct BiasInvariance {
  double score_shift_error = 0.0;  // |(s'_b - s_b) - delta| for the shifted class b
  bool maps_identical = false;     // all applicable raw maps of class m bit-identical
  std::vector<Method> methods_checked;
  bool passed = false;
};

inline constexpr double kBiasShiftTolerance = 1e-5;

/// Shifts b[bias_class] by delta (default: the explained class) and checks
/// that only the score moves.
BiasInvariance bias_invariance(const Model& model, const Tensor& input, std::size_t class_index, float delta,
                               std::optional<std::size_t> bias_class = std::nullopt);
bool check_bias_invariance(const Model& model, const Tensor& input, std::size_t class_index, float delta,
                           std::optional<std::size_t> bias_class = std::nullopt);

struct FaithfulnessReport {
  std::size_t class_index = 0;
  std::string class_name;
  float score = 0.0f;
  double score_decomposition_residual = 0.0;
  std::map<Method, double> l2_to_ground_truth;
  bool cam_equivalence_applicable = false;
  bool cam_equivalence = false;
  bool bias_invariance_passed = false;
  std::size_t height = 0;
  std::size_t width = 0;
  UpsampleMode upsample = UpsampleMode::kBilinear;
};

inline constexpr float kCamEquivalenceTolerance = 1e-5f;

/// Table-1 style record for one (input, class) pair. Requires a single-FC
/// head or CAM architecture.
FaithfulnessReport faithfulness_report(const Model& model, const Tensor& input, std::size_t class_index,
                                       UpsampleMode mode = UpsampleMode::kBilinear);

nlohmann::json to_json(const FaithfulnessReport& report);

// ---------------------------------------------------------------------------
// Segmentation IoU

/// value > threshold -> 1. threshold must lie in (0, 1).
BinaryMask binarize(const Tensor& map01, double threshold);

/// |a ∧ b| / |a ∨ b|; 1 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// start, start + step, ... up to stop (inclusive), rounded to 1e-9.
std::vector<double> threshold_grid(double start = 0.02, double stop = 0.98, double step = 0.02);

struct SweepItem {
  std::size_t class_index = 0;
  Tensor map01;  // processed, upsampled explanation [H, W]
  BinaryMask gt;
};

struct ClassIoU {
  std::size_t class_index = 0;
  std::string class_name;
  std::size_t count = 0;
  double best_threshold = 0.0;
  double best_mean_iou = 0.0;
};

struct IoUReport {
  std::vector<double> grid;
  std::vector<ClassIoU> per_class;  // ascending class index, classes present only
  double overall_mean_iou = 0.0;    // over all pairs, each at its class's threshold
  std::size_t pairs = 0;
};

/// Per class, picks the threshold with the highest mean IoU (lowest on ties).
/// The IoU matrix is computed in parallel; reductions run in item order.
IoUReport threshold_sweep(std::span<const SweepItem> items, const std::vector<double>& grid,
                          const std::vector<std::string>& class_names = {});

nlohmann::json to_json(const IoUReport& report);

}  // namespace camkit
