// ZIDS container, all integers and reals little-endian:
//
//   "ZIDS" | u32 version | u64 N | u32 d | u32 K
//   K x class name (u32 length + UTF-8 bytes)
//   u32 C | C x (f64 min, f64 max)          scaling table
//   N*d f32                                 row-major matrix
//   N u16                                   primary labels
//   tail: string primary granularity
//         u32 E | E x (string granularity, u32 K_e, K_e names, N u16 labels)
//         u32 c | c column names

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "zdids/error.hpp"
#include "zdids/preprocess.hpp"

namespace zdids {

namespace {

constexpr char kMagic[4] = {'Z', 'I', 'D', 'S'};
constexpr std::size_t kChunkValues = 1 << 16;

void flush(std::ostream& out, detail::ByteWriter& w) {
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  w.bytes().clear();
}

template <typename T>
void write_bulk(std::ostream& out, const std::vector<T>& values) {
  detail::ByteWriter w;
  for (std::size_t start = 0; start < values.size(); start += kChunkValues) {
    const std::size_t end = std::min(values.size(), start + kChunkValues);
    for (std::size_t i = start; i < end; ++i) w.put(values[i]);
    flush(out, w);
  }
}

void write_names(detail::ByteWriter& w, const std::vector<std::string>& names) {
  for (const auto& s : names) w.put_string(s);
}

// Pulls exact byte counts from a stream; any shortfall is a corrupt container.
class StreamReader {
 public:
  explicit StreamReader(std::istream& in) : in_(in) {}

  std::string bytes(std::size_t n) {
    std::string buf(n, '\0');
    in_.read(buf.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CorruptModel("container truncated");
    return buf;
  }

  template <typename T>
  T get() {
    const std::string raw = bytes(sizeof(T));
    detail::ByteReader r(raw.data(), raw.size(), "container");
    return r.get<T>();
  }

  std::string string() {
    const auto len = get<std::uint32_t>();
    if (len > (1u << 20)) throw CorruptModel("container string length " + std::to_string(len));
    return bytes(len);
  }

  template <typename T>
  void bulk(std::vector<T>& out, std::size_t count) {
    out.resize(count);
    for (std::size_t start = 0; start < count; start += kChunkValues) {
      const std::size_t n = std::min(count - start, kChunkValues);
      const std::string raw = bytes(n * sizeof(T));
      detail::ByteReader r(raw.data(), raw.size(), "container");
      for (std::size_t i = 0; i < n; ++i) out[start + i] = r.get<T>();
    }
  }

 private:
  std::istream& in_;
};

void check_labels(const std::vector<std::uint16_t>& y, std::size_t k) {
  for (auto v : y) {
    if (v >= k) throw CorruptModel("container label " + std::to_string(v) + " >= K");
  }
}

}  // namespace

void write_container(std::ostream& out, const EncodedDataset& ds) {
  if (ds.x.size() != ds.n * ds.d || ds.y.size() != ds.n) {
    throw ShapeMismatch("dataset buffers do not match N x d");
  }
  detail::ByteWriter w;
  w.put_raw(std::string_view(kMagic, 4));
  w.put(kContainerVersion);
  w.put(static_cast<std::uint64_t>(ds.n));
  w.put(static_cast<std::uint32_t>(ds.d));
  w.put(static_cast<std::uint32_t>(ds.class_names.size()));
  write_names(w, ds.class_names);
  w.put(static_cast<std::uint32_t>(ds.scaling.ranges.size()));
  for (const auto& r : ds.scaling.ranges) {
    w.put(r.min);
    w.put(r.max);
  }
  flush(out, w);
  write_bulk(out, ds.x);
  write_bulk(out, ds.y);

  w.put_string(ds.granularity);
  w.put(static_cast<std::uint32_t>(ds.extra_labels.size()));
  for (const auto& col : ds.extra_labels) {
    if (col.y.size() != ds.n) throw ShapeMismatch("extra label column length differs from N");
    w.put_string(col.granularity);
    w.put(static_cast<std::uint32_t>(col.class_names.size()));
    write_names(w, col.class_names);
    flush(out, w);
    write_bulk(out, col.y);
  }
  w.put(static_cast<std::uint32_t>(ds.column_names.size()));
  write_names(w, ds.column_names);
  flush(out, w);
  if (!out) throw IoError("failed writing container");
}

EncodedDataset read_container(std::istream& in) {
  StreamReader r(in);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw CorruptModel("not a ZIDS container");
  const auto version = r.get<std::uint32_t>();
  if (version != kContainerVersion) {
    throw VersionMismatch("container version " + std::to_string(version) + " (supported: " +
                          std::to_string(kContainerVersion) + ")");
  }
  EncodedDataset ds;
  ds.n = r.get<std::uint64_t>();
  ds.d = r.get<std::uint32_t>();
  const auto k = r.get<std::uint32_t>();
  if (k > UINT16_MAX) throw CorruptModel("implausible class count");
  for (std::uint32_t i = 0; i < k; ++i) ds.class_names.push_back(r.string());
  const auto c = r.get<std::uint32_t>();
  if (c > ds.d) throw CorruptModel("scaling table wider than the matrix");
  ds.scaling.ranges.resize(c);
  for (auto& range : ds.scaling.ranges) {
    range.min = r.get<double>();
    range.max = r.get<double>();
  }
  r.bulk(ds.x, ds.n * ds.d);
  r.bulk(ds.y, ds.n);
  check_labels(ds.y, k);

  ds.granularity = r.string();
  const auto extras = r.get<std::uint32_t>();
  if (extras > 16) throw CorruptModel("implausible label column count");
  for (std::uint32_t e = 0; e < extras; ++e) {
    LabelColumn col;
    col.granularity = r.string();
    const auto ke = r.get<std::uint32_t>();
    if (ke > UINT16_MAX) throw CorruptModel("implausible class count");
    for (std::uint32_t i = 0; i < ke; ++i) col.class_names.push_back(r.string());
    r.bulk(col.y, ds.n);
    check_labels(col.y, ke);
    ds.extra_labels.push_back(std::move(col));
  }
  const auto names = r.get<std::uint32_t>();
  if (names != 0 && names != ds.d) throw CorruptModel("column name count differs from d");
  for (std::uint32_t i = 0; i < names; ++i) ds.column_names.push_back(r.string());
  return ds;
}

void save_container(const EncodedDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_container(out, ds);
}

EncodedDataset load_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_container(in);
}

}  // namespace zdids
