#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "camkit/tensor.hpp"

namespace camkit {

/// 8-bit interleaved image, 1 (gray) or 3 (RGB) channels.
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> samples;

  ImageBuffer() = default;
  ImageBuffer(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> samples);

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits);

  std::size_t count() const;
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

// Binary Netpbm only: P5 (gray) and P6 (RGB), maxval 255.
ImageBuffer decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const ImageBuffer& image);

ImageBuffer read_pnm(const std::filesystem::path& path);
ImageBuffer read_pgm(const std::filesystem::path& path);  // requires P5
ImageBuffer read_ppm(const std::filesystem::path& path);  // requires P6
/// Writes P6 for 3-channel buffers and P5 for gray ones.
void write_ppm(const ImageBuffer& image, const std::filesystem::path& path);

/// [C, H, W] tensor with samples scaled by 1/255.
Tensor image_to_tensor(const ImageBuffer& image);

/// P5 file whose samples are all 0 or 255; anything else is rejected.
BinaryMask read_mask(const std::filesystem::path& path);
BinaryMask mask_from_image(const ImageBuffer& image);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// Piecewise-linear blue -> green -> red ramp with breakpoints 0, 0.5, 1,
/// rounded half up per channel.
std::array<std::uint8_t, 3> colormap(float value);

/// map01 [H, W] with values in [0, 1] -> RGB image.
ImageBuffer render_heatmap(const Tensor& map01);

/// round((1 - alpha) * base + alpha * heatmap); gray bases are expanded to RGB.
ImageBuffer render_overlay(const ImageBuffer& base, const Tensor& map01, double alpha);

}  // namespace camkit
