#include "camkit/tensor_io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "byte_io.hpp"
#include "camkit/error.hpp"

namespace camkit {

namespace {
constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  detail::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u64(d);
  w.f32s(t.data());
  return std::move(w.buffer());
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  auto magic = r.take(4, "TNSR magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic))
    throw Error(ErrorCode::kBadMagic, "not a TNSR tensor file");
  const std::uint32_t rank = r.u32("TNSR rank");
  Shape shape;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint64_t d = r.u64("TNSR dims");
    if (d == 0) throw Error(ErrorCode::kHeaderParse, "TNSR dimension of size 0");
    if (count > std::numeric_limits<std::uint64_t>::max() / d / 4)
      throw Error(ErrorCode::kHeaderParse, "TNSR dimensions overflow");
    count *= d;
    shape.push_back(static_cast<std::size_t>(d));
  }
  if (r.remaining() < count * 4) throw Error(ErrorCode::kTruncated, "TNSR payload truncated");
  if (r.remaining() > count * 4) throw Error(ErrorCode::kOffsetMismatch, "TNSR trailing bytes after payload");
  return Tensor(std::move(shape), detail::decode_f32s(r.take(count * 4, "TNSR payload")));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) { write_file_atomic(path, encode_tensor(t)); }

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::kIo, "rename to " + path.string() + " failed: " + ec.message());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace camkit
