#include "camkit/nnx.hpp"

#include <json.hpp>
#include <variant>

#include "byte_io.hpp"
#include "camkit/error.hpp"
#include "camkit/tensor_io.hpp"

namespace camkit {

using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'N', 'N', 'X', '1'};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

class PayloadWriter {
 public:
  json add(const char* name, const Tensor& t) {
    const std::uint64_t offset = payload_.buffer().size();
    payload_.f32s(t.data());
    return json{{"name", name},
                {"shape", t.shape()},
                {"byte_offset", offset},
                {"byte_length", payload_.buffer().size() - offset}};
  }
  std::vector<std::uint8_t>& bytes() { return payload_.buffer(); }

 private:
  detail::ByteWriter payload_;
};

json pair_json(const Pair& p) { return json::array({p[0], p[1]}); }

class PayloadReader {
 public:
  explicit PayloadReader(std::span<const std::uint8_t> payload) : payload_(payload) {}

  Tensor take(const json& layer, const char* name) {
    const json* entry = nullptr;
    for (const auto& t : layer.at("tensors"))
      if (t.at("name") == name) entry = &t;
    if (entry == nullptr) throw Error(ErrorCode::kHeaderParse, std::string("missing tensor '") + name + "'");
    const Shape shape = entry->at("shape").get<Shape>();
    const auto offset = entry->at("byte_offset").get<std::uint64_t>();
    const auto length = entry->at("byte_length").get<std::uint64_t>();
    for (std::size_t d : shape)
      if (d == 0) throw Error(ErrorCode::kHeaderParse, std::string("tensor '") + name + "' has a zero dimension");
    if (length != shape_size(shape) * 4)
      throw Error(ErrorCode::kOffsetMismatch, std::string("tensor '") + name + "' byte_length " +
                                                  std::to_string(length) + " does not match shape " +
                                                  shape_to_string(shape));
    if (offset > payload_.size() || length > payload_.size() - offset)
      throw Error(ErrorCode::kPayloadOverrun, std::string("tensor '") + name + "' at offset " +
                                                  std::to_string(offset) + " + " + std::to_string(length) +
                                                  " overruns payload of " + std::to_string(payload_.size()) +
                                                  " bytes");
    if (offset != cursor_)
      throw Error(ErrorCode::kOffsetMismatch, std::string("tensor '") + name + "' declared at offset " +
                                                  std::to_string(offset) + ", expected " + std::to_string(cursor_));
    cursor_ += length;
    return Tensor(shape, detail::decode_f32s(payload_.subspan(offset, length)));
  }

  void finish() const {
    if (cursor_ != payload_.size())
      throw Error(ErrorCode::kOffsetMismatch, "payload has " + std::to_string(payload_.size() - cursor_) +
                                                  " unreferenced trailing bytes");
  }

 private:
  std::span<const std::uint8_t> payload_;
  std::uint64_t cursor_ = 0;
};

Pair read_pair(const json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<std::size_t>>();
  if (v.size() != 2) throw Error(ErrorCode::kHeaderParse, std::string(key) + " must have two entries");
  return {v[0], v[1]};
}

}  // namespace

std::vector<std::uint8_t> encode_model(const Model& model) {
  PayloadWriter payload;
  json layers = json::array();
  for (const Layer& layer : model.layers()) {
    json rec{{"kind", kind_name(kind_of(layer))}};
    std::visit(Overloaded{
                   [&](const Conv2d& c) {
                     rec["stride"] = pair_json(c.stride);
                     rec["padding"] = pair_json(c.padding);
                     rec["tensors"] = json::array({payload.add("weight", c.weight), payload.add("bias", c.bias)});
                   },
                   [&](const MaxPool2d& p) {
                     rec["kernel"] = pair_json(p.kernel);
                     rec["stride"] = pair_json(p.stride);
                   },
                   [&](const AvgPool2d& p) {
                     rec["kernel"] = pair_json(p.kernel);
                     rec["stride"] = pair_json(p.stride);
                   },
                   [&](const Linear& l) {
                     rec["tensors"] = json::array({payload.add("weight", l.weight), payload.add("bias", l.bias)});
                   },
                   [&](const auto&) {},
               },
               layer);
    layers.push_back(std::move(rec));
  }
  const json header{{"format_version", kNnxFormatVersion},
                    {"class_names", model.class_names()},
                    {"explanation_layer", model.explanation_layer()},
                    {"input_shape", model.input_shape()},
                    {"layers", std::move(layers)}};
  const std::string text = header.dump();

  detail::ByteWriter out;
  out.bytes(kMagic, 4);
  out.u64(text.size());
  out.bytes(text.data(), text.size());
  out.bytes(payload.bytes().data(), payload.bytes().size());
  return std::move(out.buffer());
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin()))
    throw Error(ErrorCode::kBadMagic, "not an NNX1 model file");
  r.take(4, "NNX magic");
  const std::uint64_t header_len = r.u64("NNX header length");
  if (header_len > r.remaining())
    throw Error(ErrorCode::kTruncated, "NNX header length " + std::to_string(header_len) + " exceeds file size");
  const auto header_bytes = r.take(header_len, "NNX header");
  const auto payload = bytes.subspan(r.position());

  json header;
  try {
    header = json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kHeaderParse, std::string("NNX header is not valid JSON: ") + e.what());
  }

  try {
    if (header.at("format_version").get<int>() != kNnxFormatVersion)
      throw Error(ErrorCode::kHeaderParse, "unsupported NNX format_version " + header.at("format_version").dump());
    PayloadReader tensors(payload);
    std::vector<Layer> layers;
    for (const json& rec : header.at("layers")) {
      switch (kind_from_name(rec.at("kind").get<std::string>())) {
        case LayerKind::kConv2d: {
          Tensor weight = tensors.take(rec, "weight");
          Tensor bias = tensors.take(rec, "bias");
          layers.emplace_back(
              Conv2d{std::move(weight), std::move(bias), read_pair(rec, "stride"), read_pair(rec, "padding")});
          break;
        }
        case LayerKind::kReLU: layers.emplace_back(ReLU{}); break;
        case LayerKind::kMaxPool2d:
          layers.emplace_back(MaxPool2d{read_pair(rec, "kernel"), read_pair(rec, "stride")});
          break;
        case LayerKind::kAvgPool2d:
          layers.emplace_back(AvgPool2d{read_pair(rec, "kernel"), read_pair(rec, "stride")});
          break;
        case LayerKind::kGlobalAvgPool: layers.emplace_back(GlobalAvgPool{}); break;
        case LayerKind::kFlatten: layers.emplace_back(Flatten{}); break;
        case LayerKind::kLinear: {
          Tensor weight = tensors.take(rec, "weight");
          Tensor bias = tensors.take(rec, "bias");
          layers.emplace_back(Linear{std::move(weight), std::move(bias)});
          break;
        }
      }
    }
    tensors.finish();
    return Model(std::move(layers), header.at("explanation_layer").get<std::size_t>(),
                 header.at("class_names").get<std::vector<std::string>>(), header.at("input_shape").get<Shape>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kHeaderParse, std::string("malformed NNX header: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) { write_file_atomic(path, encode_model(model)); }

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace camkit
