#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "camkit/cli.hpp"
#include "camkit/imaging.hpp"

namespace camkit::cli::detail {

struct LoadedInput {
  Tensor tensor;       // [C, H, W]
  ImageBuffer base;    // for overlays
};

/// PNM files become tensors in [0, 1]; .tnsr files are used as-is and get a
/// clamped grayscale/RGB rendering as overlay base.
LoadedInput load_input(const std::filesystem::path& path, const Model& model);

/// The selector that applies to input `i`.
std::string selector_for(const RunConfig& config, std::size_t i, const std::string& fallback);

/// "<index>_<stem>", unique per input position.
std::string item_label(const std::filesystem::path& input, std::size_t i);

struct ItemRecord {
  std::string input;
  bool ok = true;
  std::string error;
  std::vector<std::string> artifacts;  // relative to the run directory
  nlohmann::json extra;
};

/// Manifest with artifacts listed in input order.
void write_manifest(const RunConfig& config, std::string_view command, const std::vector<ItemRecord>& items,
                    const std::vector<std::string>& run_artifacts);

/// Writes `text` to out/name and returns the relative name.
std::string write_text(const RunConfig& config, const std::string& name, std::string_view text);

/// Prints failures to err and returns the exit code.
int report_failures(const std::vector<ItemRecord>& items, std::ostream& err);

/// Aligned plain-text table; first column left-aligned, the rest right-aligned.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

std::string fixed(double value, int decimals);

}  // namespace camkit::cli::detail
