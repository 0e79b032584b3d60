#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "camkit/cli.hpp"
#include "camkit/error.hpp"
#include "camkit/evaluation.hpp"
#include "camkit/fixtures.hpp"
#include "camkit/forward.hpp"
#include "camkit/grad.hpp"
#include "camkit/nnx.hpp"
#include "camkit/parallel.hpp"
#include "camkit/tensor_io.hpp"
#include "common.hpp"

namespace camkit::cli {

using detail::ItemRecord;
namespace fs = std::filesystem;

namespace {

void require_inputs(const RunConfig& config) {
  if (config.inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one --input is required");
  if (config.class_selectors.size() > 1 && config.class_selectors.size() != config.inputs.size())
    throw Error(ErrorCode::kInvalidArgument, "--class takes one value or one per input (" +
                                                 std::to_string(config.inputs.size()) + ")");
  if (config.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
}

std::vector<Method> methods_or(const RunConfig& config, std::vector<Method> fallback) {
  return config.methods.empty() ? fallback : config.methods;
}

/// Runs fn for each input in parallel, capturing failures per item.
template <typename Fn>
std::vector<ItemRecord> for_each_input(const RunConfig& config, Fn&& fn) {
  std::vector<ItemRecord> records(config.inputs.size());
  parallel_for(records.size(), [&](std::size_t i) {
    ItemRecord& record = records[i];
    record.input = config.inputs[i].string();
    try {
      fn(i, record);
    } catch (const std::exception& e) {
      record.ok = false;
      record.error = e.what();
    }
  });
  return records;
}

// Wraps a whole command so setup errors become a usage exit code.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int cmd_explain(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_inputs(config);
    const Model model = load_model(config.model);
    const std::vector<Method> methods = methods_or(config, {Method::kHiResCam, Method::kGradCam});
    fs::create_directories(config.out);

    auto records = for_each_input(config, [&](std::size_t i, ItemRecord& record) {
      const auto input = detail::load_input(config.inputs[i], model);
      const ForwardTrace trace = forward(model, input.tensor);
      const auto classes = resolve_classes(detail::selector_for(config, i, "top-1"), model, trace.scores());
      const std::string label = detail::item_label(config.inputs[i], i);
      fs::create_directories(config.out / label);

      for (std::size_t m : classes) {
        for (Method method : methods) {
          const AttentionMap map = explain(model, trace, m, method, config.upsample);
          const std::string base =
              label + "/" + std::string(method_name(method)) + "_" + model.class_names()[m];
          auto emit = [&](const std::string& suffix) {
            record.artifacts.push_back(base + suffix);
            return config.out / (base + suffix);
          };
          save_tensor(map.raw, emit("_raw.tnsr"));
          save_tensor(map.processed, emit("_processed.tnsr"));
          save_tensor(map.upsampled, emit("_upsampled.tnsr"));
          write_ppm(render_heatmap(map.upsampled), emit("_heatmap.ppm"));
          write_ppm(render_overlay(input.base, map.upsampled, config.alpha), emit("_overlay.ppm"));
          nlohmann::json sidecar{{"method", method_name(method)},
                                 {"class_index", m},
                                 {"class_name", model.class_names()[m]},
                                 {"explanation_layer", model.explanation_layer()},
                                 {"score", trace.scores()[m]},
                                 {"input", config.inputs[i].string()},
                                 {"upsample", upsample_mode_name(config.upsample)},
                                 {"alpha", config.alpha}};
          write_text_atomic(emit(".json"), sidecar.dump(2) + "\n");
        }
      }
      record.extra = nlohmann::json{{"classes", classes}};
    });

    detail::write_manifest(config, "explain", records, {});
    std::size_t written = 0;
    for (const auto& r : records) written += r.artifacts.size();
    out << "explain: " << records.size() << " input(s), " << written << " file(s) under " << config.out.string()
        << "\n";
    return detail::report_failures(records, err);
  });
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_inputs(config);
    const Model model = load_model(config.model);
    const Architecture arch = classify_architecture(model);
    if (arch == Architecture::kOther)
      throw Error(ErrorCode::kUnsupportedArchitecture,
                  "verify needs a single-FC head or CAM architecture, model is " +
                      std::string(architecture_name(arch)));
    fs::create_directories(config.out);

    std::vector<std::vector<FaithfulnessReport>> reports(config.inputs.size());
    auto records = for_each_input(config, [&](std::size_t i, ItemRecord& record) {
      const auto input = detail::load_input(config.inputs[i], model);
      const ForwardTrace trace = forward(model, input.tensor);
      const auto classes = resolve_classes(detail::selector_for(config, i, "all"), model, trace.scores());
      std::vector<std::string> failed_checks;
      for (std::size_t m : classes) {
        FaithfulnessReport report = faithfulness_report(model, input.tensor, m, config.upsample);
        if (!report.bias_invariance_passed) failed_checks.push_back(report.class_name + ": bias invariance");
        if (report.cam_equivalence_applicable && !report.cam_equivalence)
          failed_checks.push_back(report.class_name + ": cam equivalence");
        if (report.l2_to_ground_truth.at(Method::kHiResCam) != 0.0)
          failed_checks.push_back(report.class_name + ": hirescam differs from ground truth");
        reports[i].push_back(std::move(report));
      }
      if (!failed_checks.empty()) {
        record.ok = false;
        record.error = "failed checks:";
        for (const auto& c : failed_checks) record.error += " [" + c + "]";
      }
    });

    // Table: one row per class, mean L2 over inputs for each method.
    std::vector<Method> columns{Method::kGradCam, Method::kHiResCam};
    if (arch == Architecture::kCam) columns.insert(columns.begin(), Method::kCam);
    std::map<std::size_t, std::map<Method, std::pair<double, std::size_t>>> sums;
    nlohmann::json records_json = nlohmann::json::array();
    for (std::size_t i = 0; i < reports.size(); ++i)
      for (const auto& report : reports[i]) {
        nlohmann::json j = to_json(report);
        j["input"] = config.inputs[i].string();
        records_json.push_back(std::move(j));
        for (Method method : columns) {
          auto& [sum, n] = sums[report.class_index][method];
          sum += report.l2_to_ground_truth.at(method);
          ++n;
        }
      }

    std::vector<std::string> header{"class"};
    for (Method method : columns) header.emplace_back(method_name(method));
    std::vector<std::vector<std::string>> rows;
    nlohmann::json summary = nlohmann::json::object();
    std::map<Method, std::pair<double, std::size_t>> overall;
    for (const auto& [m, per_method] : sums) {
      std::vector<std::string> row{model.class_names()[m]};
      for (Method method : columns) {
        const auto [sum, n] = per_method.at(method);
        row.push_back(detail::fixed(sum / static_cast<double>(n), 4));
        summary[model.class_names()[m]][std::string(method_name(method))] = sum / static_cast<double>(n);
        overall[method].first += sum;
        overall[method].second += n;
      }
      rows.push_back(std::move(row));
    }
    if (!sums.empty()) {
      std::vector<std::string> row{"mean"};
      for (Method method : columns)
        row.push_back(detail::fixed(overall[method].first / static_cast<double>(overall[method].second), 4));
      rows.push_back(std::move(row));
    }
    const std::string table = "L2 distance to locations the model used\n" + detail::format_table(header, rows);

    nlohmann::json doc{{"model", config.model.string()},
                       {"architecture", architecture_name(arch)},
                       {"upsample", upsample_mode_name(config.upsample)},
                       {"records", std::move(records_json)},
                       {"mean_l2_by_class", std::move(summary)}};
    const std::vector<std::string> artifacts{detail::write_text(config, "verify.json", doc.dump(2) + "\n"),
                                             detail::write_text(config, "verify_table.txt", table)};
    detail::write_manifest(config, "verify", records, artifacts);
    out << table;
    return detail::report_failures(records, err);
  });
}

int cmd_eval_iou(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_inputs(config);
    if (config.masks.size() != config.inputs.size())
      throw Error(ErrorCode::kInvalidArgument, "eval-iou needs one --mask per --input (" +
                                                   std::to_string(config.masks.size()) + " masks, " +
                                                   std::to_string(config.inputs.size()) + " inputs)");
    const Model model = load_model(config.model);
    const std::vector<Method> methods = methods_or(config, {Method::kGradCam, Method::kHiResCam});
    const std::vector<double> grid = threshold_grid(config.grid_start, config.grid_stop, config.grid_step);
    fs::create_directories(config.out);

    // items[i][j]: input i, method j
    std::vector<std::vector<SweepItem>> items(config.inputs.size());
    auto records = for_each_input(config, [&](std::size_t i, ItemRecord& record) {
      const auto input = detail::load_input(config.inputs[i], model);
      const BinaryMask gt = read_mask(config.masks[i]);
      if (gt.width != input.base.width || gt.height != input.base.height)
        throw Error(ErrorCode::kShapeMismatch, "mask " + config.masks[i].string() + " is " +
                                                   std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                                                   ", image is " + std::to_string(input.base.width) + "x" +
                                                   std::to_string(input.base.height));
      const ForwardTrace trace = forward(model, input.tensor);
      const auto classes = resolve_classes(detail::selector_for(config, i, "top-1"), model, trace.scores());
      if (classes.size() != 1)
        throw Error(ErrorCode::kInvalidArgument, "eval-iou needs exactly one class per input");
      for (Method method : methods)
        items[i].push_back(SweepItem{classes[0], explain(model, trace, classes[0], method, config.upsample).upsampled,
                                     gt});
      record.extra = nlohmann::json{{"class_index", classes[0]}};
    });

    nlohmann::json per_method = nlohmann::json::object();
    std::vector<IoUReport> reports;
    for (std::size_t j = 0; j < methods.size(); ++j) {
      std::vector<SweepItem> column;
      for (std::size_t i = 0; i < items.size(); ++i)
        if (records[i].ok) column.push_back(items[i][j]);
      reports.push_back(threshold_sweep(column, grid, model.class_names()));
      per_method[std::string(method_name(methods[j]))] = to_json(reports.back());
    }

    std::vector<std::string> header{"class"};
    for (Method method : methods) header.emplace_back(method_name(method));
    std::vector<std::vector<std::string>> rows;
    std::set<std::size_t> classes;
    for (const auto& report : reports)
      for (const auto& c : report.per_class) classes.insert(c.class_index);
    for (std::size_t m : classes) {
      std::vector<std::string> row{model.class_names()[m]};
      for (const auto& report : reports) {
        auto it = std::find_if(report.per_class.begin(), report.per_class.end(),
                               [&](const ClassIoU& c) { return c.class_index == m; });
        row.push_back(detail::fixed(it->best_mean_iou, 4) + " @" + detail::fixed(it->best_threshold, 2));
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::string> mean_row{"mean"};
    for (const auto& report : reports) mean_row.push_back(detail::fixed(report.overall_mean_iou, 4));
    rows.push_back(std::move(mean_row));
    const std::string table = "Mean IoU (best threshold per class)\n" + detail::format_table(header, rows);

    nlohmann::json doc{{"model", config.model.string()},
                       {"upsample", upsample_mode_name(config.upsample)},
                       {"grid", grid},
                       {"methods", std::move(per_method)}};
    const std::vector<std::string> artifacts{detail::write_text(config, "iou.json", doc.dump(2) + "\n"),
                                             detail::write_text(config, "iou_table.txt", table)};
    detail::write_manifest(config, "eval-iou", records, artifacts);
    out << table;
    return detail::report_failures(records, err);
  });
}

int cmd_decompose(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_inputs(config);
    const Model model = load_model(config.model);
    const std::vector<Method> methods = methods_or(config, {Method::kHiResCam, Method::kGradCam});
    for (Method method : methods)
      if (method != Method::kHiResCam && method != Method::kGradCam)
        throw Error(ErrorCode::kInvalidArgument,
                    "decompose supports hirescam and gradcam, not " + std::string(method_name(method)));
    fs::create_directories(config.out);
    const Shape& input_shape = model.input_shape();

    auto records = for_each_input(config, [&](std::size_t i, ItemRecord& record) {
      const auto input = detail::load_input(config.inputs[i], model);
      const ForwardTrace trace = forward(model, input.tensor);
      const auto classes = resolve_classes(detail::selector_for(config, i, "top-1"), model, trace.scores());
      const std::string label = detail::item_label(config.inputs[i], i);
      nlohmann::json details = nlohmann::json::array();

      for (std::size_t m : classes) {
        const ScoreGradient gradient = grad_wrt_feature_maps(model, trace, m);
        const std::string dir = label + "/decompose_" + model.class_names()[m];
        fs::create_directories(config.out / dir);
        auto emit = [&](const std::string& name) {
          record.artifacts.push_back(dir + "/" + name);
          return config.out / (dir + "/" + name);
        };

        std::set<std::size_t> feature_union;
        std::map<Method, std::vector<FeatureContribution>> top;
        nlohmann::json summary{{"class_index", m}, {"class_name", model.class_names()[m]}, {"k", config.k}};
        for (Method method : methods) {
          top[method] = decompose_topk(trace.feature_maps(), gradient.grad_feature_maps, method, config.k);
          nlohmann::json ranked = nlohmann::json::array();
          for (const auto& fc : top[method]) {
            feature_union.insert(fc.feature);
            ranked.push_back({{"feature", fc.feature}, {"mean_contribution", fc.mean_contribution}});
          }
          summary["top_features"][std::string(method_name(method))] = std::move(ranked);
        }
        summary["union"] = feature_union;

        // Contribution panels for every feature in the union, for every method.
        const std::size_t features = trace.feature_maps().dim(0);
        const auto all = [&](Method method) {
          return decompose_topk(trace.feature_maps(), gradient.grad_feature_maps, method, features);
        };
        std::map<Method, std::vector<FeatureContribution>> full;
        for (Method method : methods) full[method] = all(method);
        for (std::size_t f : feature_union) {
          const std::string tag = "f" + std::to_string(f);
          save_tensor(trace.feature_maps().slice0(f), emit(tag + "_activation.tnsr"));
          for (Method method : methods) {
            const auto& contributions = full[method];
            const auto it = std::find_if(contributions.begin(), contributions.end(),
                                         [&](const FeatureContribution& fc) { return fc.feature == f; });
            const std::string name = tag + "_" + std::string(method_name(method));
            save_tensor(it->contribution_map, emit(name + ".tnsr"));
            const Tensor panel =
                upsample(postprocess(it->contribution_map), input_shape[1], input_shape[2], config.upsample);
            write_ppm(render_heatmap(panel), emit(name + ".ppm"));
          }
        }
        write_text_atomic(emit("decomposition.json"), summary.dump(2) + "\n");
        details.push_back(std::move(summary));
      }
      record.extra = std::move(details);
    });

    detail::write_manifest(config, "decompose", records, {});
    out << "decompose: " << records.size() << " input(s), k = " << config.k << "\n";
    return detail::report_failures(records, err);
  });
}

int cmd_make_fixtures(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
    fs::create_directories(config.out / "models");
    fs::create_directories(config.out / "images");
    fs::create_directories(config.out / "masks");

    std::vector<std::string> artifacts;
    auto save = [&](const Model& model, const std::string& name) {
      save_model(model, config.out / name);
      artifacts.push_back(name);
    };
    save(fixtures::make_single_fc_model(config.seed), "models/single_fc.nnx");
    save(fixtures::make_cam_model(config.seed), "models/cam.nnx");
    save(fixtures::make_other_model(config.seed), "models/other.nnx");
    save(fixtures::make_identity_input_model(config.seed), "models/identity_input.nnx");

    const auto& names = fixtures::default_class_names();
    const auto samples = fixtures::make_synthetic_dataset(config.seed, 10, 16, 16, names.size());
    nlohmann::json dataset = nlohmann::json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "sample_%02zu", i);
      const std::string image = "images/" + std::string(stem) + ".ppm";
      const std::string mask = "masks/" + std::string(stem) + ".pgm";
      write_ppm(samples[i].image, config.out / image);
      write_mask(samples[i].mask, config.out / mask);
      artifacts.push_back(image);
      artifacts.push_back(mask);
      dataset.push_back({{"image", image},
                         {"mask", mask},
                         {"class_index", samples[i].class_index},
                         {"class_name", names[samples[i].class_index]}});
    }
    artifacts.push_back(detail::write_text(
        config, "dataset.json", nlohmann::json{{"seed", config.seed}, {"samples", dataset}}.dump(2) + "\n"));

    RunConfig manifest_config = config;
    manifest_config.model.clear();
    detail::write_manifest(manifest_config, "make-fixtures", {}, artifacts);
    out << "make-fixtures: seed " << config.seed << ", " << artifacts.size() << " file(s) under "
        << config.out.string() << "\n";
    return kExitOk;
  });
}

}  // namespace camkit::cli
