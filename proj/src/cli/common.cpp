#include "common.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "camkit/error.hpp"
#include "camkit/tensor_io.hpp"

namespace camkit::cli {

std::vector<std::size_t> resolve_classes(const std::string& selector, const Model& model, const Tensor& scores) {
  const std::size_t m = model.num_classes();
  if (selector == "all") {
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  if (selector.rfind("top-", 0) == 0) {
    const std::string count = selector.substr(4);
    if (count.empty() || !std::all_of(count.begin(), count.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw Error(ErrorCode::kInvalidArgument, "bad class selector '" + selector + "'");
    const std::size_t k = std::stoul(count);
    if (k == 0 || k > m)
      throw Error(ErrorCode::kInvalidArgument,
                  "class selector '" + selector + "' needs 1..." + std::to_string(m) + " classes");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto s = scores.data();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    order.resize(k);
    return order;
  }
  if (!selector.empty() && std::all_of(selector.begin(), selector.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const std::size_t index = std::stoul(selector);
    if (index >= m)
      throw Error(ErrorCode::kInvalidArgument,
                  "class index " + selector + " out of range for " + std::to_string(m) + " classes");
    return {index};
  }
  return {model.class_index(selector)};
}

namespace detail {

namespace {

ImageBuffer tensor_to_image(const Tensor& t) {
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  const std::size_t channels = c == 3 ? 3 : 1;
  std::vector<std::uint8_t> samples(h * w * channels);
  const auto data = t.data();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < channels; ++k) {
        const float v = std::clamp(data[(k * h + y) * w + x], 0.0f, 1.0f);
        samples[(y * w + x) * channels + k] = static_cast<std::uint8_t>(v * 255.0f + 0.5f);
      }
  return ImageBuffer(w, h, channels, std::move(samples));
}

}  // namespace

LoadedInput load_input(const std::filesystem::path& path, const Model& model) {
  LoadedInput in;
  if (path.extension() == ".tnsr") {
    in.tensor = load_tensor(path);
    if (in.tensor.shape() != model.input_shape())
      throw Error(ErrorCode::kShapeMismatch, "input " + path.string() + " has shape " +
                                                 shape_to_string(in.tensor.shape()) + ", model expects " +
                                                 shape_to_string(model.input_shape()));
    in.base = tensor_to_image(in.tensor);
  } else {
    in.base = read_pnm(path);
    in.tensor = image_to_tensor(in.base);
    if (in.tensor.shape() != model.input_shape())
      throw Error(ErrorCode::kShapeMismatch, "image " + path.string() + " is " + shape_to_string(in.tensor.shape()) +
                                                 " (channels, height, width), model expects " +
                                                 shape_to_string(model.input_shape()));
  }
  return in;
}

std::string selector_for(const RunConfig& config, std::size_t i, const std::string& fallback) {
  if (config.class_selectors.empty()) return fallback;
  if (config.class_selectors.size() == 1) return config.class_selectors.front();
  return config.class_selectors.at(i);
}

std::string item_label(const std::filesystem::path& input, std::size_t i) {
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%03zu_", i);
  return prefix + input.stem().string();
}

void write_manifest(const RunConfig& config, std::string_view command, const std::vector<ItemRecord>& items,
                    const std::vector<std::string>& run_artifacts) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["model"] = config.model.string();
  manifest["artifacts"] = run_artifacts;
  nlohmann::json list = nlohmann::json::array();
  for (const ItemRecord& item : items) {
    nlohmann::json j;
    j["input"] = item.input;
    j["status"] = item.ok ? "ok" : "error";
    if (!item.ok) j["error"] = item.error;
    j["artifacts"] = item.artifacts;
    if (!item.extra.is_null()) j["details"] = item.extra;
    list.push_back(std::move(j));
  }
  manifest["items"] = std::move(list);
  write_text_atomic(config.out / "manifest.json", manifest.dump(2) + "\n");
}

std::string write_text(const RunConfig& config, const std::string& name, std::string_view text) {
  write_text_atomic(config.out / name, text);
  return name;
}

int report_failures(const std::vector<ItemRecord>& items, std::ostream& err) {
  std::size_t failed = 0;
  for (const ItemRecord& item : items)
    if (!item.ok) {
      ++failed;
      err << "error: " << item.input << ": " << item.error << "\n";
    }
  if (failed == 0) return kExitOk;
  err << failed << " of " << items.size() << " item(s) failed\n";
  return kExitItemFailed;
}

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  };
  widen(header);
  for (const auto& row : rows) widen(row);

  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < row.size() ? row[c] : "";
      const std::string pad(width[c] - cell.size(), ' ');
      if (c > 0) os << "  ";
      os << (c == 0 ? cell + pad : pad + cell);
    }
    os << "\n";
  };
  emit(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << "\n";
  for (const auto& row : rows) emit(row);
  return os.str();
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace detail
}  // namespace camkit::cli
