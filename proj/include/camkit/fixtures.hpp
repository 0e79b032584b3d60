#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "camkit/imaging.hpp"
#include "camkit/model.hpp"

namespace camkit::fixtures {

/// mt19937_64 with hand-rolled float draws, so fixtures are bit-identical
/// across standard libraries (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [lo, hi) with 24 random mantissa bits.
  float uniform(float lo, float hi);
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

Tensor random_tensor(Rng& rng, Shape shape, float lo, float hi);

inline const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names{"airplane", "bird", "cat", "dog"};
  return names;
}

// Desk-scale models on a [3, 16, 16] input. They share a body of
// conv3x3(pad 1) -> relu -> maxpool2 and an explanation conv with 16 maps,
// 2x2 kernel, stride 1, no padding ([16, 7, 7]); only the head differs.
Model make_single_fc_model(std::uint64_t seed);  // -> flatten -> linear
Model make_cam_model(std::uint64_t seed);        // -> global avg pool -> flatten -> linear
Model make_other_model(std::uint64_t seed);      // -> flatten -> linear -> relu -> linear

/// Explanation layer is a 1x1 identity convolution applied to the input.
Model make_identity_input_model(std::uint64_t seed);

inline constexpr std::size_t kGradcheckVariants = 5;

/// Small two-conv models on [1, 6, 6] covering every layer kind; `variant`
/// picks the topology (mod kGradcheckVariants).
Model make_gradcheck_model(std::uint64_t seed, std::size_t variant);

struct SyntheticSample {
  ImageBuffer image;
  BinaryMask mask;
  std::size_t class_index = 0;
};

/// Noisy RGB images with one bright rectangle; the mask marks the rectangle.
std::vector<SyntheticSample> make_synthetic_dataset(std::uint64_t seed, std::size_t count, std::size_t height,
                                                    std::size_t width, std::size_t num_classes);

}  // namespace camkit::fixtures
