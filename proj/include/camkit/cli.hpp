#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "camkit/explain.hpp"
#include "camkit/model.hpp"

namespace camkit::cli {

struct RunConfig {
  std::filesystem::path model;
  std::vector<std::filesystem::path> inputs;  // PNM images or TNSR tensors
  std::vector<std::filesystem::path> masks;   // eval-iou only, one per input
  /// Index, name, "top-k" or "all". Either one selector for every input or
  /// one per input. Empty means the command's default.
  std::vector<std::string> class_selectors;
  std::vector<Method> methods;  // empty means the command's default
  UpsampleMode upsample = UpsampleMode::kBilinear;
  std::filesystem::path out;
  double grid_start = 0.02;
  double grid_stop = 0.98;
  double grid_step = 0.02;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  std::size_t k = 12;
};

/// Class indices named by `selector` for one input. "top-k" ranks by score,
/// ties broken by the lower index.
std::vector<std::size_t> resolve_classes(const std::string& selector, const Model& model, const Tensor& scores);

inline constexpr int kExitOk = 0;
inline constexpr int kExitItemFailed = 1;
inline constexpr int kExitUsage = 2;

// Each command writes everything under config.out (including manifest.json),
// prints a short summary or table to `out` and per-item failures to `err`.
int cmd_explain(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval_iou(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_decompose(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_make_fixtures(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a command.
int run(int argc, char** argv);

}  // namespace camkit::cli
