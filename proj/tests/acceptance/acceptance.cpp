// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// all pass. Fixture models come from the make-fixtures command.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "camkit/cli.hpp"
#include "camkit/evaluation.hpp"
#include "camkit/fixtures.hpp"
#include "camkit/forward.hpp"
#include "camkit/grad.hpp"
#include "camkit/nnx.hpp"
#include "camkit/tensor_io.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace camkit;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kResidualRelative = 1e-4;
constexpr double kFaithfulnessSeconds = 10.0;
constexpr double kGradCamNonzeroFraction = 0.95;
constexpr float kEquivalenceTolerance = 1e-5f;
constexpr double kGradientSeconds = 60.0;
constexpr double kBiasShiftTolerance = 1e-5;
constexpr float kGradXInputTolerance = 1e-5f;
constexpr std::size_t kFaithfulnessInputs = 20;
constexpr std::size_t kGradientInputs = 5;

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

class Fixtures {
 public:
  explicit Fixtures(fs::path work) : work_(std::move(work)) {}

  // make-fixtures output for `seed`, generated on first use.
  fs::path dir(std::uint64_t seed) {
    const fs::path d = work_ / ("fixtures_seed_" + std::to_string(seed));
    if (!fs::exists(d / "manifest.json")) {
      cli::RunConfig config;
      config.seed = seed;
      config.out = d;
      std::ostringstream out, err;
      if (cli::cmd_make_fixtures(config, out, err) != cli::kExitOk)
        throw std::runtime_error("make-fixtures failed: " + err.str());
    }
    return d;
  }

  Model model(std::uint64_t seed, const std::string& name) { return load_model(dir(seed) / "models" / (name + ".nnx")); }

  const fs::path& work() const { return work_; }

 private:
  fs::path work_;
};

std::vector<Tensor> random_inputs(const Model& model, std::uint64_t seed, std::size_t count) {
  fixtures::Rng rng(seed);
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < count; ++i) inputs.push_back(fixtures::random_tensor(rng, model.input_shape(), 0, 1));
  return inputs;
}

// ---------------------------------------------------------------------------

Outcome faithfulness_identity(Fixtures& fx, std::size_t& gradcam_nonzero, std::size_t& pairs) {
  const auto start = Clock::now();
  std::size_t failures = 0;
  double worst_residual = 0.0, worst_l2 = 0.0;
  gradcam_nonzero = pairs = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Model model = fx.model(seed, "single_fc");
    if (classify_architecture(model) != Architecture::kSingleFcHead) return {false, "fixture is not a single-FC head"};
    for (const Tensor& x : random_inputs(model, 100 + seed, kFaithfulnessInputs)) {
      const ForwardTrace trace = forward(model, x);
      for (std::size_t m = 0; m < model.num_classes(); ++m) {
        const AttentionMap hires = explain(model, trace, m, Method::kHiResCam);
        const AttentionMap grad = explain(model, trace, m, Method::kGradCam);
        const Tensor truth = processed_ground_truth(model, trace, m, UpsampleMode::kBilinear);
        const double s = trace.scores()[m];
        const double residual = score_decomposition_residual(model, trace, m, hires.raw);
        const double l2 = l2_faithfulness(hires.upsampled, truth);
        worst_residual = std::max(worst_residual, residual / std::max(1.0, std::abs(s)));
        worst_l2 = std::max(worst_l2, l2);
        if (residual > kResidualRelative * std::max(1.0, std::abs(s)) || l2 != 0.0) ++failures;
        gradcam_nonzero += l2_faithfulness(grad.upsampled, truth) > 0.0;
        ++pairs;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < kFaithfulnessSeconds,
          format("%zu pairs, max residual/max(1,|s|) %.2e, max HiResCAM L2 %.1f, %.2f s", pairs, worst_residual,
                 worst_l2, elapsed)};
}

Outcome gradcam_unfaithful(std::size_t nonzero, std::size_t pairs) {
  const double fraction = pairs == 0 ? 0.0 : static_cast<double>(nonzero) / static_cast<double>(pairs);
  return {pairs > 0 && fraction >= kGradCamNonzeroFraction,
          format("Grad-CAM L2 > 0 on %zu of %zu pairs (%.1f%%)", nonzero, pairs, 100.0 * fraction)};
}

Outcome triple_equivalence(Fixtures& fx) {
  std::size_t checked = 0, failures = 0;
  float worst_raw = 0, worst_scaled = 0, worst_processed = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Model model = fx.model(seed, "cam");
    if (classify_architecture(model) != Architecture::kCam) return {false, "fixture is not a CAM architecture"};
    for (const Tensor& x : random_inputs(model, 200 + seed, 10)) {
      const ForwardTrace trace = forward(model, x);
      for (std::size_t m = 0; m < model.num_classes(); ++m) {
        const CamEquivalence eq = cam_equivalence(model, trace, m, kEquivalenceTolerance);
        worst_raw = std::max(worst_raw, eq.hirescam_vs_gradcam);
        worst_scaled = std::max(worst_scaled, eq.cam_vs_scaled_hirescam);
        worst_processed = std::max(worst_processed, eq.processed_max_diff);
        failures += !eq.equivalent;
        ++checked;
      }
    }
  }
  return {failures == 0, format("%zu checks; max |hires-grad| %.1e, max |cam-D1D2*hires| %.1e, max processed diff %.1e",
                                checked, worst_raw, worst_scaled, worst_processed)};
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  std::size_t compared = 0, failures = 0, redraws = 0, checks = 0;
  double worst_rel = 0, worst_abs = 0;
  for (std::size_t v = 0; v < fixtures::kGradcheckVariants; ++v) {
    const Model model = fixtures::make_gradcheck_model(500 + v, v);
    fixtures::Rng rng(900 + v);
    for (std::size_t i = 0; i < kGradientInputs; ++i) {
      const std::size_t m = i % model.num_classes();
      for (FdTarget target : {FdTarget::kInput, FdTarget::kFeatureMaps}) {
        const auto checked = gradcheck::kink_free_input(model, m, target, rng);
        if (!checked) return {false, format("no kink-free input found for model %zu", v)};
        redraws += checked->redraws;
        const ForwardTrace trace = forward(model, checked->input);
        const Tensor analytic = target == FdTarget::kInput ? *grad_wrt_input(model, trace, m).grad_input
                                                           : grad_wrt_feature_maps(model, trace, m).grad_feature_maps;
        const auto cmp = gradcheck::compare(analytic, checked->oracle.gradient);
        worst_rel = std::max(worst_rel, cmp.max_relative);
        worst_abs = std::max(worst_abs, cmp.max_absolute);
        compared += cmp.compared;
        failures += !cmp.passed;
        ++checks;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < kGradientSeconds,
          format("%zu gradients, %zu elements; max rel err %.2e, max abs err (|fd| < 1e-4) %.2e; %zu inputs redrawn "
                 "for kinks; %.2f s",
                 checks, compared, worst_rel, worst_abs, redraws, elapsed)};
}

Outcome bias_invariance_all(Fixtures& fx) {
  std::size_t checked = 0, failures = 0;
  double worst_shift = 0;
  for (const char* name : {"single_fc", "cam", "other", "identity_input"}) {
    const Model model = fx.model(1, name);
    for (const Tensor& x : random_inputs(model, 300, 3)) {
      for (std::size_t m = 0; m < model.num_classes(); ++m) {
        for (float delta : {1.0f, -model.score_layer().bias[m]}) {
          const BiasInvariance r = bias_invariance(model, x, m, delta);
          worst_shift = std::max(worst_shift, r.score_shift_error);
          failures += !(r.maps_identical && r.score_shift_error <= kBiasShiftTolerance);
          ++checked;
        }
      }
    }
  }
  return {failures == 0, format("%zu shifts over 4 fixtures; maps bit-identical; max |score shift - delta| %.1e",
                                checked, worst_shift)};
}

Outcome iou_protocol(Fixtures& fx) {
  std::vector<std::string> problems;
  const auto grid = threshold_grid();
  bool grid_ok = grid.size() == 49;
  for (std::size_t i = 0; grid_ok && i < grid.size(); ++i) grid_ok = grid[i] == static_cast<double>(i + 1) / 50.0;
  if (!grid_ok) problems.push_back("grid");

  // Hand-counted cases on 4x4 masks.
  auto block = [](std::size_t y, std::size_t x) {
    std::vector<std::uint8_t> bits(16, 0);
    for (std::size_t dy = 0; dy < 2; ++dy)
      for (std::size_t dx = 0; dx < 2; ++dx) bits[(y + dy) * 4 + x + dx] = 1;
    return BinaryMask(4, 4, bits);
  };
  if (iou(block(1, 1), block(1, 1)) != 1.0) problems.push_back("identical");
  if (iou(block(0, 0), block(2, 2)) != 0.0) problems.push_back("disjoint");
  if (iou(block(0, 0), block(0, 1)) != 1.0 / 3.0) problems.push_back("overlap");

  // Sweep on the 10-image synthetic set vs the brute-force oracle, for two
  // methods.
  const fs::path dir = fx.dir(1);
  const Model model = fx.model(1, "cam");
  const auto samples = fixtures::make_synthetic_dataset(1, 10, 16, 16, model.num_classes());
  std::size_t sweeps = 0;
  for (Method method : {Method::kHiResCam, Method::kGradCam}) {
    std::vector<SweepItem> items;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%02zu", i);
      const ImageBuffer image = read_ppm(dir / "images" / (std::string(name) + ".ppm"));
      const BinaryMask gt = read_mask(dir / "masks" / (std::string(name) + ".pgm"));
      if (!(image == samples[i].image) || !(gt == samples[i].mask)) problems.push_back("fixture images");
      const ForwardTrace trace = forward(model, image_to_tensor(image));
      items.push_back({samples[i].class_index, explain(model, trace, samples[i].class_index, method).upsampled, gt});
    }
    const IoUReport report = threshold_sweep(items, grid, model.class_names());
    const auto expected = oracle::brute_force_sweep(items, grid);
    bool same = report.per_class.size() == expected.classes.size() && report.overall_mean_iou == expected.overall;
    for (std::size_t c = 0; same && c < expected.classes.size(); ++c)
      same = report.per_class[c].class_index == expected.classes[c] &&
             report.per_class[c].best_threshold == expected.best_threshold[c] &&
             report.per_class[c].best_mean_iou == expected.best_mean_iou[c];
    if (!same) problems.push_back(std::string("sweep ") + std::string(method_name(method)));
    ++sweeps;
  }
  // Informative maps: each mask blurred with noise, so the best threshold is
  // an interior grid point rather than a tie at the first one.
  {
    fixtures::Rng rng(17);
    std::vector<SweepItem> items;
    for (const auto& sample : samples) {
      std::vector<float> values(sample.mask.bits.size());
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = std::clamp(0.6f * sample.mask.bits[i] + rng.uniform(0.0f, 0.5f), 0.0f, 1.0f);
      items.push_back({sample.class_index, Tensor({16, 16}, values), sample.mask});
    }
    const IoUReport report = threshold_sweep(items, grid, model.class_names());
    const auto expected = oracle::brute_force_sweep(items, grid);
    bool same = report.per_class.size() == expected.classes.size() && report.overall_mean_iou == expected.overall;
    bool interior = true;
    for (std::size_t c = 0; same && c < expected.classes.size(); ++c) {
      same = report.per_class[c].best_threshold == expected.best_threshold[c] &&
             report.per_class[c].best_mean_iou == expected.best_mean_iou[c];
      interior = interior && report.per_class[c].best_threshold > grid.front();
    }
    if (!same) problems.push_back("sweep noisy masks");
    if (!interior) problems.push_back("noisy-mask sweep did not exercise the threshold choice");
    ++sweeps;
  }
  std::string detail = format("49-value grid, 3 hand-counted cases, %zu sweeps over 10 images vs brute force", sweeps);
  for (const auto& p : problems) detail += "; mismatch: " + p;
  return {problems.empty(), detail};
}

Outcome gradient_x_input_identity(Fixtures& fx) {
  const Model model = fx.model(1, "identity_input");
  if (model.explanation_layer() != 0) return {false, "explanation layer is not the input convolution"};
  float worst = 0;
  std::size_t checked = 0;
  for (const Tensor& x : random_inputs(model, 400, 10)) {
    const ForwardTrace trace = forward(model, x);
    for (std::size_t m = 0; m < model.num_classes(); ++m) {
      const ScoreGradient g = grad_wrt_input(model, trace, m);
      const Tensor gxi = gradient_x_input(x, *g.grad_input);
      const Tensor hires = hirescam(trace.feature_maps(), g.grad_feature_maps);
      worst = std::max(worst, max_abs_diff(gxi, hires));
      ++checked;
    }
  }
  return {worst <= kGradXInputTolerance, format("%zu maps, max |gradxinput - hirescam| %.1e", checked, worst)};
}

Outcome determinism(Fixtures& fx) {
  std::vector<std::string> problems;
  auto snapshot = [](const fs::path& dir) {
    std::map<std::string, std::vector<std::uint8_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    return files;
  };

  // Every command twice into the same directory.
  const fs::path run_dir = fx.work() / "determinism";
  std::map<std::string, std::vector<std::uint8_t>> first;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(run_dir);
    std::ostringstream out, err;
    cli::RunConfig config;
    config.seed = 21;
    config.out = run_dir / "fixtures";
    cli::cmd_make_fixtures(config, out, err);

    cli::RunConfig run;
    run.inputs = {run_dir / "fixtures/images/sample_00.ppm", run_dir / "fixtures/images/sample_05.ppm"};
    run.masks = {run_dir / "fixtures/masks/sample_00.pgm", run_dir / "fixtures/masks/sample_05.pgm"};
    run.model = run_dir / "fixtures/models/cam.nnx";
    run.methods = {Method::kCam, Method::kGradCam, Method::kHiResCam, Method::kGradientXInput};
    run.class_selectors = {"all"};
    run.out = run_dir / "explain";
    int rc = cli::cmd_explain(run, out, err);
    run.methods = {};
    run.class_selectors = {};
    run.out = run_dir / "iou";
    rc |= cli::cmd_eval_iou(run, out, err);
    run.model = run_dir / "fixtures/models/single_fc.nnx";
    run.out = run_dir / "verify";
    rc |= cli::cmd_verify(run, out, err);
    run.out = run_dir / "decompose";
    rc |= cli::cmd_decompose(run, out, err);
    if (rc != 0) problems.push_back("a command failed: " + err.str());
    if (pass == 0) first = snapshot(run_dir);
    else if (first != snapshot(run_dir)) problems.push_back("repeated runs differ");
  }

  // Same seed in a different directory gives the same model and image bytes.
  const auto other = snapshot(fx.dir(21));
  for (const auto& [name, bytes] : other)
    if (name != "manifest.json" && first.at("fixtures/" + name) != bytes) problems.push_back("fixture " + name);

  // NNX round trip.
  std::size_t models = 0;
  for (const char* name : {"single_fc", "cam", "other", "identity_input"}) {
    const auto bytes = read_file(fx.dir(21) / "models" / (std::string(name) + ".nnx"));
    const Model model = decode_model(bytes);
    if (encode_model(model) != bytes) problems.push_back(std::string("nnx ") + name);
    ++models;
  }
  std::string detail = format("make-fixtures and 4 commands repeated: %zu files identical; %zu NNX round trips",
                              first.size(), models);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "camkit_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  Fixtures fx(work);

  std::size_t nonzero = 0, pairs = 0;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"faithfulness identity (HiResCAM == ground truth)", [&] { return faithfulness_identity(fx, nonzero, pairs); }},
      {"Grad-CAM unfaithfulness pattern", [&] { return gradcam_unfaithful(nonzero, pairs); }},
      {"CAM / HiResCAM / Grad-CAM equivalence", [&] { return triple_equivalence(fx); }},
      {"gradient correctness vs finite differences", [&] { return gradient_correctness(); }},
      {"bias invariance", [&] { return bias_invariance_all(fx); }},
      {"IoU protocol", [&] { return iou_protocol(fx); }},
      {"Gradient*Input identity", [&] { return gradient_x_input_identity(fx); }},
      {"determinism", [&] { return determinism(fx); }},
  };

  std::size_t failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.passed;
    std::printf("%s  %s: %s\n", outcome.passed ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
