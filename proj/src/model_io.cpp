// ZMLP model file, little-endian:
//
//   "ZMLP" | u32 version | u32 L | L x u32 dims
//   u32 C | C x class name (u32 length + UTF-8 bytes)
//   per layer: fan_in*fan_out f64 weights (row-major), fan_out f64 bias
//   u32 crc32 of every preceding byte

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <zlib.h>

#include "binary_io.hpp"
#include "zdids/error.hpp"
#include "zdids/mlp.hpp"

namespace zdids {

namespace {

constexpr char kMagic[4] = {'Z', 'M', 'L', 'P'};
constexpr std::uint32_t kMaxDims = 64;
constexpr std::uint32_t kMaxWidth = 1u << 20;

std::uint32_t checksum(const char* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in slices
  while (size > 0) {
    const auto part = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), part);
    data += part;
    size -= part;
  }
  return static_cast<std::uint32_t>(crc);
}

void validate_shapes(const MlpModel& model) {
  if (model.dims.size() < 2 || model.layers.size() + 1 != model.dims.size()) {
    throw BadDims("model dims and layers disagree");
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    if (layer.fan_in != model.dims[l] || layer.fan_out != model.dims[l + 1] ||
        layer.weights.size() != layer.fan_in * layer.fan_out ||
        layer.bias.size() != layer.fan_out) {
      throw BadDims("layer " + std::to_string(l) + " does not match dims");
    }
  }
  if (!model.class_names.empty() && model.class_names.size() != model.num_classes()) {
    throw BadDims("class name count differs from K");
  }
}

}  // namespace

void write_model(std::ostream& out, const MlpModel& model) {
  validate_shapes(model);
  detail::ByteWriter w;
  w.put_raw(std::string_view(kMagic, 4));
  w.put(kModelVersion);
  w.put(static_cast<std::uint32_t>(model.dims.size()));
  for (auto d : model.dims) w.put(static_cast<std::uint32_t>(d));
  w.put(static_cast<std::uint32_t>(model.class_names.size()));
  for (const auto& name : model.class_names) w.put_string(name);
  for (const auto& layer : model.layers) {
    w.put_array(layer.weights);
    w.put_array(layer.bias);
  }
  w.put(checksum(w.bytes().data(), w.bytes().size()));
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError("failed writing model");
}

MlpModel read_model(std::istream& in) {
  const std::vector<char> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  detail::ByteReader r(buf.data(), buf.size(), "model");
  if (r.get_raw(4) != std::string_view(kMagic, 4)) r.fail("not a ZMLP model file");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) {
    throw VersionMismatch("model version " + std::to_string(version) + " (supported: " +
                          std::to_string(kModelVersion) + ")");
  }
  if (buf.size() < 12) r.fail("missing checksum");
  const std::size_t body = buf.size() - 4;
  detail::ByteReader tail(buf.data() + body, 4, "model");
  if (tail.get<std::uint32_t>() != checksum(buf.data(), body)) r.fail("checksum mismatch");

  MlpModel model;
  const auto num_dims = r.get<std::uint32_t>();
  if (num_dims < 2 || num_dims > kMaxDims) r.fail("bad dimension count");
  for (std::uint32_t i = 0; i < num_dims; ++i) {
    const auto d = r.get<std::uint32_t>();
    if (d < 1 || d > kMaxWidth) r.fail("bad layer width");
    model.dims.push_back(d);
  }
  const auto names = r.get<std::uint32_t>();
  if (names != 0 && names != model.dims.back()) r.fail("class name count differs from K");
  for (std::uint32_t i = 0; i < names; ++i) model.class_names.push_back(r.get_string());
  for (std::size_t l = 0; l + 1 < model.dims.size(); ++l) {
    DenseLayer layer;
    layer.fan_in = model.dims[l];
    layer.fan_out = model.dims[l + 1];
    r.get_array(layer.weights, layer.fan_in * layer.fan_out);
    r.get_array(layer.bias, layer.fan_out);
    model.layers.push_back(std::move(layer));
  }
  if (r.position() != body) r.fail("trailing bytes before checksum");
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_model(out, model);
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_model(in);
}

}  // namespace zdids
