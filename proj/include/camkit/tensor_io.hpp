#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "camkit/tensor.hpp"

namespace camkit {

// Raw tensor file: "TNSR", u32 LE rank, rank x u64 LE dims, then the f32 LE
// payload in row-major order.
std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace camkit
