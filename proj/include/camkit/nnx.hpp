#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "camkit/model.hpp"

namespace camkit {

// NNX container: "NNX1", u64 LE header length, UTF-8 JSON header, then the
// f32 LE payload. Each tensor in the header carries {name, shape,
// byte_offset, byte_length}; offsets are relative to the payload start and
// tensors tile the payload with no padding, in declaration order.
inline constexpr int kNnxFormatVersion = 1;

std::vector<std::uint8_t> encode_model(const Model& model);
Model decode_model(std::span<const std::uint8_t> bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace camkit
