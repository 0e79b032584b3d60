#include <gtest/gtest.h>

#include "camkit/evaluation.hpp"
#include "camkit/fixtures.hpp"
#include "camkit/forward.hpp"
#include "camkit/grad.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace camkit;

namespace {

BinaryMask mask(std::size_t w, std::size_t h, std::vector<std::uint8_t> bits) { return BinaryMask(w, h, std::move(bits)); }

// 4x4 mask with the 2x2 block whose top-left corner is (y, x) set.
BinaryMask block(std::size_t y, std::size_t x) {
  std::vector<std::uint8_t> bits(16, 0);
  for (std::size_t dy = 0; dy < 2; ++dy)
    for (std::size_t dx = 0; dx < 2; ++dx) bits[(y + dy) * 4 + x + dx] = 1;
  return mask(4, 4, bits);
}

Tensor random_input(const Model& model, fixtures::Rng& rng) {
  return fixtures::random_tensor(rng, model.input_shape(), 0, 1);
}

}  // namespace

TEST(GroundTruth, SumPlusBiasIsTheScore) {
  fixtures::Rng rng(1);
  for (const Model& model : {fixtures::make_single_fc_model(2), fixtures::make_cam_model(2)}) {
    const ForwardTrace trace = forward(model, random_input(model, rng));
    for (std::size_t m = 0; m < model.num_classes(); ++m) {
      const Tensor gt = ground_truth_locations(model, trace, m);
      double total = model.score_layer().bias[m];
      for (float v : gt.data()) total += v;
      const double s = trace.scores()[m];
      EXPECT_LE(std::abs(total - s), 1e-4 * std::max(1.0, std::abs(s)));
      EXPECT_TRUE(bit_identical(gt, hirescam(trace.feature_maps(), grad_wrt_feature_maps(model, trace, m).grad_feature_maps)));
    }
  }
}

TEST(GroundTruth, ZeroMapsAndSingleLocation) {
  // Dead feature maps: ground truth is zero and the score is the bias.
  const Model dead({Conv2d{Tensor::zeros({2, 1, 3, 3}), Tensor::zeros({2}), {1, 1}, {0, 0}}, Flatten{},
                    Linear{Tensor::filled({2, 8}, 0.5f), Tensor::vector({0.25f, -3})}},
                   0, {"a", "b"}, {1, 4, 4});
  fixtures::Rng rng(3);
  const ForwardTrace trace = forward(dead, random_input(dead, rng));
  EXPECT_EQ(ground_truth_locations(dead, trace, 1), Tensor::zeros({2, 2}));
  EXPECT_EQ(trace.scores()[1], -3.0f);

  // 1x1 spatial map: the single location carries s_m - b_m.
  const Model point({Conv2d{fixtures::random_tensor(rng, {3, 1, 4, 4}, -1, 1), Tensor::zeros({3}), {1, 1}, {0, 0}},
                     Flatten{}, Linear{fixtures::random_tensor(rng, {2, 3}, -1, 1), Tensor::vector({0.5f, 1})}},
                    0, {"a", "b"}, {1, 4, 4});
  const ForwardTrace t2 = forward(point, random_input(point, rng));
  const Tensor gt = ground_truth_locations(point, t2, 0);
  ASSERT_EQ(gt.shape(), (Shape{1, 1}));
  EXPECT_NEAR(gt[0], t2.scores()[0] - 0.5f, 1e-6);
}

TEST(GroundTruth, RejectsOtherArchitecture) {
  const Model model = fixtures::make_other_model(1);
  const ForwardTrace trace = forward(model, Tensor::zeros(model.input_shape()));
  EXPECT_ERROR_CODE(ground_truth_locations(model, trace, 0), ErrorCode::kUnsupportedArchitecture);
  EXPECT_ERROR_CODE(faithfulness_report(model, Tensor::zeros(model.input_shape()), 0), ErrorCode::kUnsupportedArchitecture);
}

TEST(L2Faithfulness, Examples) {
  const Tensor a = Tensor::matrix({{0, 0.5f}, {1, 0}});
  EXPECT_EQ(l2_faithfulness(a, a), 0.0);
  EXPECT_DOUBLE_EQ(l2_faithfulness(Tensor::matrix({{0, 0}, {0, 0}}), Tensor::matrix({{3, 0}, {0, 4}})), 5.0);
  EXPECT_ERROR_CODE(l2_faithfulness(a, Tensor::zeros({2, 3})), ErrorCode::kShapeMismatch);
}

TEST(L2Faithfulness, HiResCamIsExactGradCamIsNot) {
  const Model model = fixtures::make_single_fc_model(3);
  fixtures::Rng rng(3);
  const Tensor x = random_input(model, rng);
  for (std::size_t m = 0; m < model.num_classes(); ++m) {
    const FaithfulnessReport r = faithfulness_report(model, x, m);
    EXPECT_EQ(r.l2_to_ground_truth.at(Method::kHiResCam), 0.0);
    EXPECT_GT(r.l2_to_ground_truth.at(Method::kGradCam), 0.0);
    EXPECT_FALSE(r.cam_equivalence_applicable);
    EXPECT_TRUE(r.bias_invariance_passed);
    EXPECT_EQ(r.l2_to_ground_truth.count(Method::kCam), 0u);
    EXPECT_EQ(r.height, 16u);
  }
}

TEST(CamEquivalence, HoldsOnCamFixtures) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Model model = fixtures::make_cam_model(seed);
    fixtures::Rng rng(seed);
    const ForwardTrace trace = forward(model, random_input(model, rng));
    for (std::size_t m = 0; m < model.num_classes(); ++m) {
      EXPECT_TRUE(check_cam_equivalence(model, trace, m, 1e-5f));
      const CamEquivalence eq = cam_equivalence(model, trace, m, 0.0f);
      EXPECT_LE(eq.processed_max_diff, 1e-6f);
      // Grad-CAM weights equal w_m^f / (D1 D2).
      const Tensor alpha = gradcam_weights(grad_wrt_feature_maps(model, trace, m).grad_feature_maps).alpha;
      for (std::size_t f = 0; f < alpha.size(); ++f)
        EXPECT_NEAR(alpha[f], model.score_layer().weight.at({m, f}) / 49.0, 1e-6);
    }
  }
}

TEST(CamEquivalence, RejectsNonCam) {
  const Model model = fixtures::make_single_fc_model(1);
  const ForwardTrace trace = forward(model, Tensor::zeros(model.input_shape()));
  EXPECT_ERROR_CODE(check_cam_equivalence(model, trace, 0, 1e-5f), ErrorCode::kUnsupportedArchitecture);
}

TEST(BiasInvariance, Examples) {
  fixtures::Rng rng(9);
  for (const Model& model : {fixtures::make_single_fc_model(9), fixtures::make_cam_model(9), fixtures::make_other_model(9)}) {
    const Tensor x = random_input(model, rng);
    for (std::size_t m = 0; m < model.num_classes(); ++m) {
      EXPECT_TRUE(check_bias_invariance(model, x, m, 1.0f));
      EXPECT_TRUE(check_bias_invariance(model, x, m, -model.score_layer().bias[m]));
      const BiasInvariance other = bias_invariance(model, x, m, 2.5f, (m + 1) % model.num_classes());
      EXPECT_TRUE(other.passed);
      EXPECT_TRUE(other.maps_identical);
    }
    const auto checked = bias_invariance(model, x, 0, 1.0f).methods_checked;
    const bool is_cam = classify_architecture(model) == Architecture::kCam;
    EXPECT_EQ(checked.size(), is_cam ? 4u : 3u);
  }
}

TEST(BiasInvariance, RejectsZeroDelta) {
  const Model model = fixtures::make_single_fc_model(1);
  EXPECT_ERROR_CODE(check_bias_invariance(model, Tensor::zeros(model.input_shape()), 0, 0.0f), ErrorCode::kInvalidArgument);
}

TEST(Iou, HandCountedCases) {
  EXPECT_EQ(iou(block(1, 1), block(1, 1)), 1.0);
  EXPECT_EQ(iou(block(0, 0), block(2, 2)), 0.0);
  EXPECT_EQ(iou(block(0, 0), block(0, 1)), 2.0 / 6.0);
  EXPECT_EQ(iou(mask(4, 4, std::vector<std::uint8_t>(16, 0)), mask(4, 4, std::vector<std::uint8_t>(16, 0))), 1.0);
  EXPECT_EQ(iou(mask(4, 4, std::vector<std::uint8_t>(16, 0)), block(0, 0)), 0.0);
  EXPECT_ERROR_CODE(iou(block(0, 0), mask(2, 2, {1, 1, 1, 1})), ErrorCode::kShapeMismatch);
}

TEST(Iou, SymmetricAndMonotoneIntersection) {
  fixtures::Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint8_t> a(64), b(64);
    for (auto& v : a) v = rng.below(2);
    for (auto& v : b) v = rng.below(2);
    const BinaryMask ma(8, 8, a), mb(8, 8, b);
    EXPECT_EQ(iou(ma, mb), iou(mb, ma));
    EXPECT_EQ(iou(ma, mb), oracle::naive_iou(a, b));
    // Growing a prediction that already contains gt never loses intersection.
    std::vector<std::uint8_t> grown = b;
    for (std::size_t i = 0; i < 64; ++i) grown[i] = grown[i] | a[i];
    std::size_t before = 0, after = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      before += a[i] && b[i];
      after += grown[i] && b[i];
    }
    EXPECT_GE(after, before);
  }
}

TEST(Binarize, StrictlyAboveThreshold) {
  const Tensor map = Tensor::matrix({{0.5f, 0.51f}, {0.0f, 1.0f}});
  EXPECT_EQ(binarize(map, 0.5).bits, (std::vector<std::uint8_t>{0, 1, 0, 1}));
  EXPECT_ERROR_CODE(binarize(map, 0.0), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(binarize(map, 1.0), ErrorCode::kInvalidArgument);
}

TEST(ThresholdGrid, DefaultHasFortyNineValues) {
  const auto grid = threshold_grid();
  ASSERT_EQ(grid.size(), 49u);
  EXPECT_EQ(grid.front(), 0.02);
  EXPECT_EQ(grid.back(), 0.98);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(grid[i], static_cast<double>(i + 1) / 50.0);
  EXPECT_ERROR_CODE(threshold_grid(0.5, 0.2, 0.1), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(threshold_grid(0.1, 0.9, 0.0), ErrorCode::kInvalidArgument);
}

TEST(ThresholdSweep, PerfectExplanationReportsLowestThreshold) {
  const BinaryMask gt = block(1, 1);
  std::vector<float> values(gt.bits.begin(), gt.bits.end());
  const std::vector<SweepItem> items{{2, Tensor({4, 4}, values), gt}};
  const IoUReport report = threshold_sweep(items, threshold_grid());
  ASSERT_EQ(report.per_class.size(), 1u);
  EXPECT_EQ(report.per_class[0].best_mean_iou, 1.0);
  EXPECT_EQ(report.per_class[0].best_threshold, 0.02);
  EXPECT_EQ(report.overall_mean_iou, 1.0);
  EXPECT_ERROR_CODE(threshold_sweep({}, threshold_grid()), ErrorCode::kInvalidArgument);
}

TEST(ThresholdSweep, TwoImagesMatchBruteForce) {
  // Image 0: a ramp; image 1: two plateaus. Same class.
  std::vector<float> ramp(16), plateaus(16);
  for (std::size_t i = 0; i < 16; ++i) {
    ramp[i] = static_cast<float>(i) / 15.0f;
    plateaus[i] = i % 4 < 2 ? 0.3f : 0.8f;
  }
  const std::vector<SweepItem> items{{0, Tensor({4, 4}, ramp), block(2, 2)}, {0, Tensor({4, 4}, plateaus), block(0, 2)}};
  const auto grid = threshold_grid();
  const IoUReport report = threshold_sweep(items, grid);
  const auto expected = oracle::brute_force_sweep(items, grid);
  ASSERT_EQ(report.per_class.size(), 1u);
  EXPECT_EQ(report.per_class[0].best_threshold, expected.best_threshold[0]);
  EXPECT_DOUBLE_EQ(report.per_class[0].best_mean_iou, expected.best_mean_iou[0]);
  EXPECT_DOUBLE_EQ(report.overall_mean_iou, expected.overall);
  // By hand at t = 0.5: the ramp keeps pixels 8..15 (4 of them in gt, IoU
  // 4/8) and the plateau image keeps columns 2-3 (IoU 4/8).
  EXPECT_EQ(iou(binarize(items[0].map01, 0.5), items[0].gt), 0.5);
  EXPECT_EQ(iou(binarize(items[1].map01, 0.5), items[1].gt), 0.5);
  EXPECT_GE(report.per_class[0].best_mean_iou, 0.5);
}

TEST(ThresholdSweep, MultiClassMatchesBruteForceAndIsParallelSafe) {
  fixtures::Rng rng(12);
  std::vector<SweepItem> items;
  for (int i = 0; i < 30; ++i) {
    std::vector<float> v(64);
    for (auto& x : v) x = rng.uniform(0, 1);
    std::vector<std::uint8_t> b(64);
    for (auto& x : b) x = rng.below(3) == 0;
    items.push_back({rng.below(4), Tensor({8, 8}, v), BinaryMask(8, 8, b)});
  }
  const auto grid = threshold_grid();
  const IoUReport report = threshold_sweep(items, grid, {"a", "b", "c", "d"});
  const auto expected = oracle::brute_force_sweep(items, grid);
  ASSERT_EQ(report.per_class.size(), expected.classes.size());
  std::size_t pairs = 0;
  for (std::size_t c = 0; c < expected.classes.size(); ++c) {
    EXPECT_EQ(report.per_class[c].class_index, expected.classes[c]);
    EXPECT_EQ(report.per_class[c].best_threshold, expected.best_threshold[c]);
    EXPECT_DOUBLE_EQ(report.per_class[c].best_mean_iou, expected.best_mean_iou[c]);
    EXPECT_GE(report.per_class[c].best_mean_iou, 0.0);
    EXPECT_LE(report.per_class[c].best_mean_iou, 1.0);
    pairs += report.per_class[c].count;
  }
  EXPECT_EQ(pairs, items.size());
  EXPECT_DOUBLE_EQ(report.overall_mean_iou, expected.overall);
  const auto json = to_json(report);
  EXPECT_EQ(json.at("grid").size(), 49u);
  EXPECT_EQ(json.at("per_class").size(), expected.classes.size());
}

TEST(Reports, FaithfulnessJsonFieldNames) {
  const Model model = fixtures::make_cam_model(4);
  fixtures::Rng rng(4);
  const auto j = to_json(faithfulness_report(model, random_input(model, rng), 1));
  for (const char* key : {"class_index", "class_name", "score", "score_decomposition_residual", "l2_to_ground_truth",
                          "equivalence_flags", "bias_invariance_passed", "resolution", "upsample"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j.at("equivalence_flags").at("cam_hirescam_gradcam").get<bool>());
  EXPECT_EQ(j.at("l2_to_ground_truth").at("hirescam").get<double>(), 0.0);
}
