#include <filesystem>

#include <gtest/gtest.h>

#include "camkit/fixtures.hpp"
#include "camkit/imaging.hpp"
#include "camkit/tensor_io.hpp"
#include "test_helpers.hpp"

using namespace camkit;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header, std::vector<std::uint8_t> raster) {
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

std::filesystem::path temp(const std::string& name) { return std::filesystem::path(testing::TempDir()) / name; }

}  // namespace

TEST(Pnm, RoundTripIsByteIdentical) {
  fixtures::Rng rng(1);
  for (std::size_t channels : {1u, 3u}) {
    std::vector<std::uint8_t> samples(5 * 3 * channels);
    for (auto& s : samples) s = static_cast<std::uint8_t>(rng.below(256));
    const ImageBuffer image(5, 3, channels, samples);
    const auto path = temp(channels == 1 ? "rt.pgm" : "rt.ppm");
    write_ppm(image, path);
    const auto first = read_file(path);
    const ImageBuffer back = read_pnm(path);
    EXPECT_EQ(back, image);
    write_ppm(back, path);
    EXPECT_EQ(read_file(path), first);
  }
}

TEST(Pnm, AcceptsCommentsAndConvertsToUnitTensor) {
  const auto bytes = bytes_of("P6\n# a comment\n2 2\n255\n", {0, 51, 255, 102, 153, 204, 255, 0, 0, 1, 2, 3});
  const ImageBuffer image = decode_pnm(bytes);
  EXPECT_EQ(image.width, 2u);
  EXPECT_EQ(image.channels, 3u);
  const Tensor t = image_to_tensor(image);
  ASSERT_EQ(t.shape(), (Shape{3, 2, 2}));
  // Channel-major: red plane first.
  EXPECT_EQ(t.at({0, 0, 0}), 0.0f);
  EXPECT_EQ(t.at({1, 0, 0}), 51.0f / 255.0f);
  EXPECT_EQ(t.at({2, 0, 0}), 1.0f);
  EXPECT_EQ(t.at({0, 0, 1}), 102.0f / 255.0f);
  EXPECT_EQ(t.at({2, 1, 1}), 3.0f / 255.0f);
}

TEST(Pnm, DistinctErrors) {
  EXPECT_ERROR_CODE(decode_pnm(bytes_of("P3\n1 1\n255\n", {0, 0, 0})), ErrorCode::kBadMagic);
  EXPECT_ERROR_CODE(decode_pnm(bytes_of("P5\n1 1\n65535\n", {0, 0})), ErrorCode::kBadMaxval);
  EXPECT_ERROR_CODE(decode_pnm(bytes_of("P5\n2 2\n255\n", {0, 0, 0})), ErrorCode::kTruncated);
  EXPECT_ERROR_CODE(decode_pnm(bytes_of("P5\n2", {})), ErrorCode::kTruncated);
  EXPECT_ERROR_CODE(read_pnm("/nonexistent/image.ppm"), ErrorCode::kIo);
  write_ppm(ImageBuffer(1, 1, 3, {1, 2, 3}), temp("rgb.ppm"));
  EXPECT_ERROR_CODE(read_pgm(temp("rgb.ppm")), ErrorCode::kBadMagic);
}

TEST(Mask, StrictValues) {
  write_ppm(ImageBuffer(2, 2, 1, {255, 255, 255, 255}), temp("ones.pgm"));
  EXPECT_EQ(read_mask(temp("ones.pgm")).bits, (std::vector<std::uint8_t>{1, 1, 1, 1}));
  write_ppm(ImageBuffer(2, 2, 1, {255, 128, 0, 0}), temp("gray.pgm"));
  EXPECT_ERROR_CODE(read_mask(temp("gray.pgm")), ErrorCode::kBadMaskValue);
  std::vector<std::uint8_t> checker(16), expected(16);
  for (std::size_t i = 0; i < 16; ++i) {
    expected[i] = ((i / 4) + (i % 4)) % 2;
    checker[i] = expected[i] ? 255 : 0;
  }
  write_ppm(ImageBuffer(4, 4, 1, checker), temp("checker.pgm"));
  const BinaryMask m = read_mask(temp("checker.pgm"));
  EXPECT_EQ(m.bits, expected);
  EXPECT_EQ(m.count(), 8u);
  write_mask(m, temp("checker2.pgm"));
  EXPECT_EQ(read_file(temp("checker2.pgm")), read_file(temp("checker.pgm")));
}

TEST(Colormap, Breakpoints) {
  using C = std::array<std::uint8_t, 3>;
  EXPECT_EQ(colormap(0.0f), (C{0, 0, 255}));
  EXPECT_EQ(colormap(0.5f), (C{0, 255, 0}));
  EXPECT_EQ(colormap(1.0f), (C{255, 0, 0}));
  // Halfway along the blue-green segment both channels are 127.5, rounded up.
  EXPECT_EQ(colormap(0.25f), (C{0, 128, 128}));
  EXPECT_EQ(colormap(0.75f), (C{128, 128, 0}));
  EXPECT_ERROR_CODE(colormap(1.5f), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(colormap(-0.1f), ErrorCode::kInvalidArgument);
}

TEST(Colormap, Monotone) {
  std::array<std::uint8_t, 3> prev = colormap(0.0f);
  for (int i = 1; i <= 1000; ++i) {
    const auto c = colormap(static_cast<float>(i) / 1000.0f);
    EXPECT_GE(c[0], prev[0]);
    EXPECT_LE(c[2], prev[2]);
    prev = c;
  }
}

TEST(Overlay, AlphaExtremes) {
  fixtures::Rng rng(4);
  const Tensor map = fixtures::random_tensor(rng, {4, 5}, 0, 1);
  std::vector<std::uint8_t> rgb(60), gray(20);
  for (auto& s : rgb) s = static_cast<std::uint8_t>(rng.below(256));
  for (auto& s : gray) s = static_cast<std::uint8_t>(rng.below(256));
  const ImageBuffer base(5, 4, 3, rgb), gbase(5, 4, 1, gray);

  EXPECT_EQ(render_overlay(base, map, 0.0), base);
  const ImageBuffer g0 = render_overlay(gbase, map, 0.0);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(g0.samples[3 * i + c], gray[i]);
  EXPECT_EQ(render_overlay(base, map, 1.0), render_heatmap(map));
  EXPECT_EQ(render_overlay(gbase, map, 1.0), render_heatmap(map));

  const ImageBuffer half = render_overlay(base, map, 0.5);
  const ImageBuffer heat = render_heatmap(map);
  for (std::size_t i = 0; i < 60; ++i)
    EXPECT_EQ(half.samples[i], static_cast<std::uint8_t>(std::floor(0.5 * rgb[i] + 0.5 * heat.samples[i] + 0.5)));

  EXPECT_ERROR_CODE(render_overlay(base, map, 1.5), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(render_overlay(base, Tensor::zeros({5, 4}), 0.5), ErrorCode::kShapeMismatch);
  EXPECT_ERROR_CODE(render_heatmap(Tensor::filled({2, 2}, 2.0f)), ErrorCode::kInvalidArgument);
}

TEST(ImageBuffer, ValidatesSampleCount) {
  EXPECT_ERROR_CODE(ImageBuffer(2, 2, 3, std::vector<std::uint8_t>(11)), ErrorCode::kShapeMismatch);
  EXPECT_ERROR_CODE(ImageBuffer(2, 2, 2, std::vector<std::uint8_t>(8)), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(BinaryMask(2, 2, {0, 1, 2, 0}), ErrorCode::kBadMaskValue);
}
