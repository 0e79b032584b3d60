#include <iostream>

#include <CLI11.hpp>

#include "camkit/cli.hpp"

namespace camkit::cli {

namespace {

struct RawOptions {
  std::vector<std::string> methods;
  std::string upsample = "bilinear";
};

void add_common(CLI::App& sub, RunConfig& config, RawOptions& raw, bool wants_methods) {
  sub.add_option("--model", config.model, "NNX model file")->required()->check(CLI::ExistingFile);
  sub.add_option("--input", config.inputs, "input image (PGM/PPM) or tensor (.tnsr); repeatable")->required();
  sub.add_option("--class", config.class_selectors,
                 "class index, name, top-k or all; one value or one per input");
  if (wants_methods)
    sub.add_option("--methods", raw.methods, "comma-separated: cam, gradcam, hirescam, gradxinput")
        ->delimiter(',');
  sub.add_option("--upsample", raw.upsample, "nearest or bilinear")
      ->check(CLI::IsMember({"nearest", "bilinear"}))
      ->capture_default_str();
  sub.add_option("--out", config.out, "run directory")->required();
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"camkit: class activation maps for sequential CNNs"};
  app.require_subcommand(1);

  RunConfig config;
  RawOptions raw;

  auto* explain = app.add_subcommand("explain", "attention maps, heatmaps and overlays");
  add_common(*explain, config, raw, true);
  explain->add_option("--alpha", config.alpha, "overlay opacity")->check(CLI::Range(0.0, 1.0))->capture_default_str();

  auto* verify = app.add_subcommand("verify", "faithfulness report against the locations the model used");
  add_common(*verify, config, raw, false);

  auto* eval = app.add_subcommand("eval-iou", "mean IoU against segmentation masks over a threshold sweep");
  add_common(*eval, config, raw, true);
  eval->add_option("--mask", config.masks, "binary PGM mask, one per input")->required();
  eval->add_option("--grid-start", config.grid_start)->capture_default_str();
  eval->add_option("--grid-stop", config.grid_stop)->capture_default_str();
  eval->add_option("--grid-step", config.grid_step)->capture_default_str();

  auto* decompose = app.add_subcommand("decompose", "per-feature contributions of the top k features");
  add_common(*decompose, config, raw, true);
  decompose->add_option("--k", config.k, "features kept per method")->check(CLI::PositiveNumber)->capture_default_str();

  auto* fixtures = app.add_subcommand("make-fixtures", "seeded fixture models, images and masks");
  fixtures->add_option("--seed", config.seed)->capture_default_str();
  fixtures->add_option("--out", config.out, "output directory")->required();

  try {
    app.parse(argc, argv);
    for (const auto& name : raw.methods) config.methods.push_back(method_from_name(name));
    config.upsample = upsample_mode_from_name(raw.upsample);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (explain->parsed()) return cmd_explain(config, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify(config, std::cout, std::cerr);
  if (eval->parsed()) return cmd_eval_iou(config, std::cout, std::cerr);
  if (decompose->parsed()) return cmd_decompose(config, std::cout, std::cerr);
  return cmd_make_fixtures(config, std::cout, std::cerr);
}

}  // namespace camkit::cli
