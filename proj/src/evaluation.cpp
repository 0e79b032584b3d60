#include "camkit/evaluation.hpp"

#include <cmath>

#include "camkit/error.hpp"
#include "camkit/grad.hpp"
#include "camkit/parallel.hpp"
#include "camkit/simd/kernels.hpp"

namespace camkit {

using json = nlohmann::json;

namespace {

// The score-layer row m arranged like A, i.e. ds_m/dA built from weights alone.
Tensor class_weight_layout(const Model& model, std::size_t class_index) {
  const Shape& a_shape = model.feature_map_shape();
  const Tensor& w = model.score_layer().weight;
  const std::size_t n = w.dim(1);
  const auto row = w.data().subspan(class_index * n, n);
  switch (classify_architecture(model)) {
    case Architecture::kSingleFcHead:
      return Tensor(a_shape, std::vector<float>(row.begin(), row.end()));
    case Architecture::kCam: {
      const std::size_t per_map = a_shape[1] * a_shape[2];
      const float count = static_cast<float>(per_map);
      std::vector<float> spread(shape_size(a_shape));
      for (std::size_t f = 0; f < a_shape[0]; ++f)
        std::fill(spread.begin() + f * per_map, spread.begin() + (f + 1) * per_map, row[f] / count);
      return Tensor(a_shape, std::move(spread));
    }
    case Architecture::kOther: break;
  }
  throw Error(ErrorCode::kUnsupportedArchitecture,
              "ground truth locations exist only for SingleFcHead or CamArchitecture models");
}

}  // namespace

Tensor ground_truth_locations(const Model& model, const ForwardTrace& trace, std::size_t class_index) {
  if (class_index >= model.num_classes())
    throw Error(ErrorCode::kInvalidArgument, "class index " + std::to_string(class_index) + " out of range");
  const Tensor w = class_weight_layout(model, class_index);
  const Tensor& a = trace.feature_maps();
  if (a.shape() != w.shape()) throw Error(ErrorCode::kShapeMismatch, "trace does not match the model");
  const std::size_t n = a.dim(1) * a.dim(2);
  std::vector<float> out(n, 0.0f);
  const auto& kern = simd::active();
  for (std::size_t f = 0; f < a.dim(0); ++f) kern.mul_acc(w.data().data() + f * n, a.data().data() + f * n, out.data(), n);
  return Tensor({a.dim(1), a.dim(2)}, std::move(out));
}

double score_decomposition_residual(const Model& model, const ForwardTrace& trace, std::size_t class_index,
                                    const Tensor& raw_hirescam) {
  const double total = simd::active().sum(raw_hirescam.data().data(), raw_hirescam.size());
  const double bias = model.score_layer().bias[class_index];
  return std::fabs(total + bias - static_cast<double>(trace.scores()[class_index]));
}

double l2_faithfulness(const Tensor& explanation, const Tensor& ground_truth) {
  if (explanation.shape() != ground_truth.shape())
    throw Error(ErrorCode::kShapeMismatch, "l2_faithfulness: " + shape_to_string(explanation.shape()) + " vs " +
                                               shape_to_string(ground_truth.shape()));
  return std::sqrt(simd::active().sq_dist(explanation.data().data(), ground_truth.data().data(), explanation.size()));
}

Tensor processed_ground_truth(const Model& model, const ForwardTrace& trace, std::size_t class_index,
                              UpsampleMode mode) {
  return upsample(postprocess(ground_truth_locations(model, trace, class_index)), trace.input.dim(1),
                  trace.input.dim(2), mode);
}

CamEquivalence cam_equivalence(const Model& model, const ForwardTrace& trace, std::size_t class_index, float tol) {
  if (classify_architecture(model) != Architecture::kCam)
    throw Error(ErrorCode::kUnsupportedArchitecture, "CAM equivalence applies to CamArchitecture models only");
  const ScoreGradient g = grad_wrt_feature_maps(model, trace, class_index);
  const Tensor& a = trace.feature_maps();
  const Tensor raw_hires = hirescam(a, g.grad_feature_maps);
  const Tensor raw_grad = gradcam(a, g.grad_feature_maps);
  const Tensor raw_cam = cam(model, trace, class_index);
  const float spatial = static_cast<float>(a.dim(1) * a.dim(2));

  CamEquivalence out;
  out.hirescam_vs_gradcam = max_abs_diff(raw_hires, raw_grad);
  out.cam_vs_scaled_hirescam = max_abs_diff(raw_cam, mul_scalar(raw_hires, spatial));
  const Tensor p_hires = postprocess(raw_hires), p_grad = postprocess(raw_grad), p_cam = postprocess(raw_cam);
  out.processed_max_diff = std::max(
      {max_abs_diff(p_hires, p_grad), max_abs_diff(p_hires, p_cam), max_abs_diff(p_grad, p_cam)});
  out.equivalent = out.hirescam_vs_gradcam <= tol && out.cam_vs_scaled_hirescam <= tol && out.processed_max_diff <= tol;
  return out;
}

bool check_cam_equivalence(const Model& model, const ForwardTrace& trace, std::size_t class_index, float tol) {
  return cam_equivalence(model, trace, class_index, tol).equivalent;
}

namespace {

std::vector<std::pair<Method, Tensor>> all_raw_maps(const Model& model, const ForwardTrace& trace,
                                                     std::size_t class_index) {
  const ScoreGradient g = grad_wrt_input(model, trace, class_index);
  std::vector<std::pair<Method, Tensor>> maps;
  if (classify_architecture(model) == Architecture::kCam)
    maps.emplace_back(Method::kCam, cam(model, trace, class_index));
  maps.emplace_back(Method::kGradCam, gradcam(trace.feature_maps(), g.grad_feature_maps));
  maps.emplace_back(Method::kHiResCam, hirescam(trace.feature_maps(), g.grad_feature_maps));
  maps.emplace_back(Method::kGradientXInput, gradient_x_input(trace.input, *g.grad_input));
  return maps;
}

}  // namespace

BiasInvariance bias_invariance(const Model& model, const Tensor& input, std::size_t class_index, float delta,
                               std::optional<std::size_t> bias_class) {
  if (delta == 0.0f) throw Error(ErrorCode::kInvalidArgument, "bias shift delta must be non-zero");
  const std::size_t shifted = bias_class.value_or(class_index);
  const Model moved = model.with_score_bias_shift(shifted, delta);
  const ForwardTrace before = forward(model, input);
  const ForwardTrace after = forward(moved, input);

  BiasInvariance out;
  out.score_shift_error = std::fabs(
      (static_cast<double>(after.scores()[shifted]) - static_cast<double>(before.scores()[shifted])) - delta);
  const auto maps_before = all_raw_maps(model, before, class_index);
  const auto maps_after = all_raw_maps(moved, after, class_index);
  out.maps_identical = true;
  for (std::size_t i = 0; i < maps_before.size(); ++i) {
    out.methods_checked.push_back(maps_before[i].first);
    out.maps_identical = out.maps_identical && bit_identical(maps_before[i].second, maps_after[i].second);
  }
  out.passed = out.maps_identical && out.score_shift_error <= kBiasShiftTolerance;
  return out;
}

bool check_bias_invariance(const Model& model, const Tensor& input, std::size_t class_index, float delta,
                           std::optional<std::size_t> bias_class) {
  return bias_invariance(model, input, class_index, delta, bias_class).passed;
}

FaithfulnessReport faithfulness_report(const Model& model, const Tensor& input, std::size_t class_index,
                                       UpsampleMode mode) {
  const Architecture arch = classify_architecture(model);
  if (arch == Architecture::kOther)
    throw Error(ErrorCode::kUnsupportedArchitecture,
                "faithfulness verification needs a SingleFcHead or CamArchitecture model; this model is Other");
  const ForwardTrace trace = forward(model, input);
  const ScoreGradient g = grad_wrt_feature_maps(model, trace, class_index);

  FaithfulnessReport r;
  r.class_index = class_index;
  r.class_name = model.class_names().at(class_index);
  r.score = trace.scores()[class_index];
  r.height = input.dim(1);
  r.width = input.dim(2);
  r.upsample = mode;

  const Tensor gt = processed_ground_truth(model, trace, class_index, mode);
  const AttentionMap hires = explain(model, trace, g, Method::kHiResCam, mode);
  const AttentionMap grad = explain(model, trace, g, Method::kGradCam, mode);
  r.score_decomposition_residual = score_decomposition_residual(model, trace, class_index, hires.raw);
  r.l2_to_ground_truth[Method::kHiResCam] = l2_faithfulness(hires.upsampled, gt);
  r.l2_to_ground_truth[Method::kGradCam] = l2_faithfulness(grad.upsampled, gt);
  if (arch == Architecture::kCam) {
    r.l2_to_ground_truth[Method::kCam] = l2_faithfulness(explain(model, trace, g, Method::kCam, mode).upsampled, gt);
    r.cam_equivalence_applicable = true;
    r.cam_equivalence = check_cam_equivalence(model, trace, class_index, kCamEquivalenceTolerance);
  }
  r.bias_invariance_passed = check_bias_invariance(model, input, class_index, 1.0f);
  return r;
}

json to_json(const FaithfulnessReport& r) {
  json l2 = json::object();
  for (const auto& [method, value] : r.l2_to_ground_truth) l2[std::string(method_name(method))] = value;
  return json{{"class_index", r.class_index},
              {"class_name", r.class_name},
              {"score", r.score},
              {"score_decomposition_residual", r.score_decomposition_residual},
              {"l2_to_ground_truth", std::move(l2)},
              {"equivalence_flags",
               {{"applicable", r.cam_equivalence_applicable}, {"cam_hirescam_gradcam", r.cam_equivalence}}},
              {"bias_invariance_passed", r.bias_invariance_passed},
              {"resolution", {r.height, r.width}},
              {"upsample", upsample_mode_name(r.upsample)}};
}

BinaryMask binarize(const Tensor& map01, double threshold) {
  if (map01.rank() != 2) throw Error(ErrorCode::kShapeMismatch, "binarize expects a 2-D map");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "threshold " + std::to_string(threshold) + " outside (0, 1)");
  std::vector<std::uint8_t> bits(map01.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = static_cast<double>(map01[i]) > threshold ? 1 : 0;
  return BinaryMask(map01.dim(1), map01.dim(0), std::move(bits));
}

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw Error(ErrorCode::kShapeMismatch, "iou: mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    inter += pred.bits[i] & gt.bits[i];
    uni += pred.bits[i] | gt.bits[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> threshold_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(start > 0.0) || !(stop < 1.0) || stop < start)
    throw Error(ErrorCode::kInvalidArgument, "threshold grid needs 0 < start <= stop < 1 and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9;
  return grid;
}

IoUReport threshold_sweep(std::span<const SweepItem> items, const std::vector<double>& grid,
                          const std::vector<std::string>& class_names) {
  if (items.empty()) throw Error(ErrorCode::kInvalidArgument, "threshold sweep needs at least one image-class pair");
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "threshold grid is empty");

  const std::size_t t_n = grid.size();
  std::vector<double> table(items.size() * t_n);
  parallel_for(items.size(), [&](std::size_t i) {
    for (std::size_t t = 0; t < t_n; ++t) table[i * t_n + t] = iou(binarize(items[i].map01, grid[t]), items[i].gt);
  });

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < items.size(); ++i) by_class[items[i].class_index].push_back(i);

  IoUReport report;
  report.grid = grid;
  report.pairs = items.size();
  std::map<std::size_t, std::size_t> best_index;
  for (const auto& [cls, members] : by_class) {
    ClassIoU row;
    row.class_index = cls;
    row.class_name = cls < class_names.size() ? class_names[cls] : std::to_string(cls);
    row.count = members.size();
    double best = -1.0;
    std::size_t best_t = 0;
    for (std::size_t t = 0; t < t_n; ++t) {
      double acc = 0.0;
      for (std::size_t i : members) acc += table[i * t_n + t];
      const double mean = acc / static_cast<double>(members.size());
      if (mean > best) {
        best = mean;
        best_t = t;
      }
    }
    row.best_threshold = grid[best_t];
    row.best_mean_iou = best;
    best_index[cls] = best_t;
    report.per_class.push_back(std::move(row));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) acc += table[i * t_n + best_index[items[i].class_index]];
  report.overall_mean_iou = acc / static_cast<double>(items.size());
  return report;
}

json to_json(const IoUReport& r) {
  json classes = json::array();
  for (const auto& c : r.per_class)
    classes.push_back({{"class_index", c.class_index},
                       {"class_name", c.class_name},
                       {"count", c.count},
                       {"best_threshold", c.best_threshold},
                       {"best_mean_iou", c.best_mean_iou}});
  return json{{"grid", r.grid}, {"per_class", std::move(classes)}, {"overall_mean_iou", r.overall_mean_iou},
              {"pairs", r.pairs}};
}

}  // namespace camkit
