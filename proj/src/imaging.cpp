#include "camkit/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "camkit/error.hpp"
#include "camkit/tensor_io.hpp"

namespace camkit {

ImageBuffer::ImageBuffer(std::size_t w, std::size_t h, std::size_t c, std::vector<std::uint8_t> s)
    : width(w), height(h), channels(c), samples(std::move(s)) {
  if (c != 1 && c != 3) throw Error(ErrorCode::kInvalidArgument, "images have 1 or 3 channels");
  if (samples.size() != w * h * c)
    throw Error(ErrorCode::kShapeMismatch, "image sample count " + std::to_string(samples.size()) + " != " +
                                               std::to_string(w) + "x" + std::to_string(h) + "x" + std::to_string(c));
}

BinaryMask::BinaryMask(std::size_t w, std::size_t h, std::vector<std::uint8_t> b)
    : width(w), height(h), bits(std::move(b)) {
  if (bits.size() != w * h) throw Error(ErrorCode::kShapeMismatch, "mask bit count does not match its size");
  for (auto v : bits)
    if (v > 1) throw Error(ErrorCode::kBadMaskValue, "mask bits must be 0 or 1");
}

std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (auto v : bits) n += v;
  return n;
}

namespace {

class HeaderParser {
 public:
  explicit HeaderParser(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= in_.size()) throw Error(ErrorCode::kTruncated, std::string("PNM header truncated before ") + what);
    if (!std::isdigit(in_[pos_])) throw Error(ErrorCode::kHeaderParse, std::string("PNM header: expected ") + what);
    std::size_t v = 0;
    while (pos_ < in_.size() && std::isdigit(in_[pos_])) {
      v = v * 10 + (in_[pos_++] - '0');
      if (v > (1u << 24)) throw Error(ErrorCode::kHeaderParse, std::string("PNM header: ") + what + " too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= in_.size()) throw Error(ErrorCode::kTruncated, "PNM header truncated before raster");
    if (!std::isspace(in_[pos_])) throw Error(ErrorCode::kHeaderParse, "PNM header: missing separator");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < in_.size()) {
      if (std::isspace(in_[pos_])) {
        ++pos_;
      } else if (in_[pos_] == '#') {
        while (pos_ < in_.size() && in_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 2;
};

ImageBuffer read_kind(const std::filesystem::path& path, std::size_t channels) {
  ImageBuffer img = read_pnm(path);
  if (img.channels != channels)
    throw Error(ErrorCode::kBadMagic, path.string() + ": expected " + (channels == 1 ? "P5" : "P6") + " file");
  return img;
}

std::uint8_t round_half_up(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

void require_unit_map(const Tensor& map01) {
  if (map01.rank() != 2) throw Error(ErrorCode::kShapeMismatch, "heatmap must be a 2-D map");
  for (float v : map01.data())
    if (!(v >= 0.0f && v <= 1.0f))
      throw Error(ErrorCode::kInvalidArgument, "heatmap value " + std::to_string(v) + " outside [0, 1]");
}

}  // namespace

ImageBuffer decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw Error(ErrorCode::kBadMagic, "expected binary P5 or P6 Netpbm");
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  HeaderParser p(bytes);
  const std::size_t width = p.number("width");
  const std::size_t height = p.number("height");
  const std::size_t maxval = p.number("maxval");
  if (width == 0 || height == 0) throw Error(ErrorCode::kHeaderParse, "PNM image has zero size");
  if (maxval != 255) throw Error(ErrorCode::kBadMaxval, "maxval " + std::to_string(maxval) + " unsupported (need 255)");
  const std::size_t start = p.raster_start();
  const std::size_t need = width * height * channels;
  if (bytes.size() - start < need)
    throw Error(ErrorCode::kTruncated, "PNM raster truncated: " + std::to_string(bytes.size() - start) + " of " +
                                           std::to_string(need) + " bytes");
  return ImageBuffer(width, height, channels,
                     std::vector<std::uint8_t>(bytes.begin() + start, bytes.begin() + start + need));
}

std::vector<std::uint8_t> encode_pnm(const ImageBuffer& image) {
  const std::string header = std::string(image.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(image.width) +
                             " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.samples.begin(), image.samples.end());
  return out;
}

ImageBuffer read_pnm(const std::filesystem::path& path) { return decode_pnm(read_file(path)); }
ImageBuffer read_pgm(const std::filesystem::path& path) { return read_kind(path, 1); }
ImageBuffer read_ppm(const std::filesystem::path& path) { return read_kind(path, 3); }

void write_ppm(const ImageBuffer& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pnm(image));
}

Tensor image_to_tensor(const ImageBuffer& image) {
  const std::size_t c = image.channels, h = image.height, w = image.width;
  std::vector<float> data(c * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch)
        data[(ch * h + y) * w + x] = static_cast<float>(image.samples[(y * w + x) * c + ch]) / 255.0f;
  return Tensor({c, h, w}, std::move(data));
}

BinaryMask mask_from_image(const ImageBuffer& image) {
  if (image.channels != 1) throw Error(ErrorCode::kBadMagic, "masks must be P5 grayscale");
  std::vector<std::uint8_t> bits(image.samples.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const std::uint8_t v = image.samples[i];
    if (v != 0 && v != 255)
      throw Error(ErrorCode::kBadMaskValue, "mask sample " + std::to_string(v) + " at index " + std::to_string(i) +
                                                " is neither 0 nor 255");
    bits[i] = v == 255 ? 1 : 0;
  }
  return BinaryMask(image.width, image.height, std::move(bits));
}

BinaryMask read_mask(const std::filesystem::path& path) { return mask_from_image(read_pgm(path)); }

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> samples(mask.bits.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = mask.bits[i] ? 255 : 0;
  write_ppm(ImageBuffer(mask.width, mask.height, 1, std::move(samples)), path);
}

std::array<std::uint8_t, 3> colormap(float value) {
  if (!(value >= 0.0f && value <= 1.0f))
    throw Error(ErrorCode::kInvalidArgument, "colormap value " + std::to_string(value) + " outside [0, 1]");
  const double v = value;
  if (v <= 0.5) {
    const double t = v / 0.5;
    return {0, round_half_up(255.0 * t), round_half_up(255.0 * (1.0 - t))};
  }
  const double t = (v - 0.5) / 0.5;
  return {round_half_up(255.0 * t), round_half_up(255.0 * (1.0 - t)), 0};
}

ImageBuffer render_heatmap(const Tensor& map01) {
  require_unit_map(map01);
  const std::size_t h = map01.dim(0), w = map01.dim(1);
  std::vector<std::uint8_t> rgb(h * w * 3);
  for (std::size_t i = 0; i < h * w; ++i) {
    const auto c = colormap(map01[i]);
    std::copy(c.begin(), c.end(), rgb.begin() + 3 * i);
  }
  return ImageBuffer(w, h, 3, std::move(rgb));
}

ImageBuffer render_overlay(const ImageBuffer& base, const Tensor& map01, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "overlay alpha outside [0, 1]");
  const ImageBuffer heat = render_heatmap(map01);
  if (heat.width != base.width || heat.height != base.height)
    throw Error(ErrorCode::kShapeMismatch, "overlay map " + shape_to_string(map01.shape()) + " does not match image " +
                                               std::to_string(base.height) + "x" + std::to_string(base.width));
  std::vector<std::uint8_t> out(base.width * base.height * 3);
  for (std::size_t i = 0; i < base.width * base.height; ++i)
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double b = base.samples[i * base.channels + (base.channels == 3 ? ch : 0)];
      out[3 * i + ch] = round_half_up((1.0 - alpha) * b + alpha * heat.samples[3 * i + ch]);
    }
  return ImageBuffer(base.width, base.height, 3, std::move(out));
}

}  // namespace camkit
