#include "camkit/fixtures.hpp"

#include <cmath>

namespace camkit::fixtures {

float Rng::uniform(float lo, float hi) {
  const float unit = static_cast<float>(engine_() >> 40) * 0x1.0p-24f;
  return lo + (hi - lo) * unit;
}

std::size_t Rng::below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

Tensor random_tensor(Rng& rng, Shape shape, float lo, float hi) {
  std::vector<float> data(shape_size(shape));
  for (float& v : data) v = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data));
}

namespace {

Conv2d conv(Rng& rng, std::size_t f_in, std::size_t f_out, std::size_t k, std::size_t stride, std::size_t pad) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(f_in * k * k));
  return Conv2d{random_tensor(rng, {f_out, f_in, k, k}, -scale, scale), random_tensor(rng, {f_out}, -0.1f, 0.1f),
                {stride, stride}, {pad, pad}};
}

Linear linear(Rng& rng, std::size_t in, std::size_t out) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(in));
  return Linear{random_tensor(rng, {out, in}, -scale, scale), random_tensor(rng, {out}, -0.1f, 0.1f)};
}

constexpr std::size_t kChannels = 3, kSide = 16, kFeatures = 16;

std::vector<Layer> body(Rng& rng) {
  return {conv(rng, kChannels, 8, 3, 1, 1), ReLU{}, MaxPool2d{{2, 2}, {2, 2}}, conv(rng, 8, kFeatures, 2, 1, 0)};
}

}  // namespace

Model make_single_fc_model(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Layer> layers = body(rng);
  layers.emplace_back(Flatten{});
  layers.emplace_back(linear(rng, kFeatures * 7 * 7, default_class_names().size()));
  return Model(std::move(layers), 3, default_class_names(), {kChannels, kSide, kSide});
}

Model make_cam_model(std::uint64_t seed) {
  Rng rng(seed ^ 0x43414d);
  std::vector<Layer> layers = body(rng);
  layers.emplace_back(GlobalAvgPool{});
  layers.emplace_back(Flatten{});
  layers.emplace_back(linear(rng, kFeatures, default_class_names().size()));
  return Model(std::move(layers), 3, default_class_names(), {kChannels, kSide, kSide});
}

Model make_other_model(std::uint64_t seed) {
  Rng rng(seed ^ 0x4f5448);
  std::vector<Layer> layers = body(rng);
  layers.emplace_back(Flatten{});
  layers.emplace_back(linear(rng, kFeatures * 7 * 7, 10));
  layers.emplace_back(ReLU{});
  layers.emplace_back(linear(rng, 10, default_class_names().size()));
  return Model(std::move(layers), 3, default_class_names(), {kChannels, kSide, kSide});
}

Model make_identity_input_model(std::uint64_t seed) {
  Rng rng(seed ^ 0x494430);
  std::vector<float> eye(kChannels * kChannels, 0.0f);
  for (std::size_t c = 0; c < kChannels; ++c) eye[c * kChannels + c] = 1.0f;
  std::vector<Layer> layers{
      Conv2d{Tensor({kChannels, kChannels, 1, 1}, eye), Tensor::zeros({kChannels}), {1, 1}, {0, 0}},
      conv(rng, kChannels, 4, 3, 1, 1),
      ReLU{},
      MaxPool2d{{2, 2}, {2, 2}},
      Flatten{},
      linear(rng, 4 * 8 * 8, default_class_names().size()),
  };
  return Model(std::move(layers), 0, default_class_names(), {kChannels, kSide, kSide});
}

Model make_gradcheck_model(std::uint64_t seed, std::size_t variant) {
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + variant);
  const std::vector<std::string> names{"a", "b", "c"};
  std::vector<Layer> layers;
  std::size_t explanation = 0;
  switch (variant % kGradcheckVariants) {
    case 0:  // single-FC head behind relu + max pooling
      layers = {conv(rng, 1, 3, 3, 1, 1), ReLU{}, MaxPool2d{{2, 2}, {2, 2}}, conv(rng, 3, 4, 2, 1, 0), Flatten{},
                linear(rng, 4 * 2 * 2, 3)};
      explanation = 3;
      break;
    case 1:  // CAM head
      layers = {conv(rng, 1, 3, 3, 1, 0), ReLU{}, conv(rng, 3, 4, 3, 1, 1), GlobalAvgPool{}, linear(rng, 4, 3)};
      explanation = 2;
      break;
    case 2:  // explanation at the first conv; suffix holds a conv and two linears
      layers = {conv(rng, 1, 4, 3, 1, 1), ReLU{}, AvgPool2d{{2, 2}, {2, 2}}, conv(rng, 4, 3, 2, 1, 0), ReLU{},
                Flatten{}, linear(rng, 3 * 2 * 2, 5), ReLU{}, linear(rng, 5, 3)};
      explanation = 0;
      break;
    case 3:  // strided conv, overlapping max pool after the explanation layer
      layers = {conv(rng, 1, 2, 3, 2, 1), ReLU{}, conv(rng, 2, 4, 2, 1, 0), ReLU{}, MaxPool2d{{2, 2}, {1, 1}},
                Flatten{}, linear(rng, 4 * 1 * 1, 3)};
      explanation = 2;
      break;
    default:  // overlapping max pool, padded explanation conv, full-map average pool
      layers = {conv(rng, 1, 3, 3, 1, 0), ReLU{}, MaxPool2d{{3, 3}, {1, 1}}, conv(rng, 3, 3, 2, 1, 1),
                AvgPool2d{{3, 3}, {1, 1}}, Flatten{}, linear(rng, 3, 3)};
      explanation = 3;
      break;
  }
  return Model(std::move(layers), explanation, names, {1, 6, 6});
}

std::vector<SyntheticSample> make_synthetic_dataset(std::uint64_t seed, std::size_t count, std::size_t height,
                                                    std::size_t width, std::size_t num_classes) {
  Rng rng(seed ^ 0x494d47);
  std::vector<SyntheticSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t class_index = rng.below(num_classes);
    const std::size_t h = 3 + rng.below(height / 2), w = 3 + rng.below(width / 2);
    const std::size_t y0 = rng.below(height - h + 1), x0 = rng.below(width - w + 1);
    const std::array<float, 3> tint{rng.uniform(0.5f, 1.0f), rng.uniform(0.5f, 1.0f), rng.uniform(0.5f, 1.0f)};

    std::vector<std::uint8_t> rgb(height * width * 3);
    std::vector<std::uint8_t> bits(height * width, 0);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const bool inside = y >= y0 && y < y0 + h && x >= x0 && x < x0 + w;
        bits[y * width + x] = inside ? 1 : 0;
        for (std::size_t c = 0; c < 3; ++c) {
          const float v = inside ? tint[c] * rng.uniform(0.8f, 1.0f) : rng.uniform(0.0f, 0.3f);
          rgb[(y * width + x) * 3 + c] = static_cast<std::uint8_t>(v * 255.0f);
        }
      }
    out.push_back(SyntheticSample{ImageBuffer(width, height, 3, std::move(rgb)),
                                  BinaryMask(width, height, std::move(bits)), class_index});
  }
  return out;
}

}  // namespace camkit::fixtures
