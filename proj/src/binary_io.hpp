#pragma once

// Little-endian primitive encoding shared by the container and model formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "zdids/error.hpp"

namespace zdids::detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_needed(T v) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    U u = std::bit_cast<U>(v);
    U r = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      r = static_cast<U>((r << 8) | (u & 0xff));
      u = static_cast<U>(u >> 8);
    }
    return std::bit_cast<T>(r);
  } else {
    return v;
  }
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    v = byteswap_if_needed(v);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void put_array(const std::vector<T>& values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const char*>(values.data());
      bytes_.insert(bytes_.end(), p, p + values.size() * sizeof(T));
    } else {
      for (T v : values) put(v);
    }
  }

  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  void put_raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  const std::vector<char>& bytes() const { return bytes_; }
  std::vector<char>& bytes() { return bytes_; }

 private:
  std::vector<char> bytes_;
};

// Reads from an in-memory buffer; every overrun is reported as CorruptModel
// with the supplied context string.
class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size, std::string context)
      : data_(data), size_(size), context_(std::move(context)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return byteswap_if_needed(v);
  }

  template <typename T>
  void get_array(std::vector<T>& out, std::size_t count) {
    if (count > (size_ - pos_) / sizeof(T)) fail("truncated array");
    out.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), data_ + pos_, count * sizeof(T));
      pos_ += count * sizeof(T);
    } else {
      for (auto& v : out) v = get<T>();
    }
  }

  std::string get_string() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s(data_ + pos_, len);
    pos_ += len;
    return s;
  }

  std::string get_raw(std::size_t len) {
    need(len);
    std::string s(data_ + pos_, len);
    pos_ += len;
    return s;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return size_ - pos_; }

  [[noreturn]] void fail(const std::string& why) const {
    throw CorruptModel(context_ + ": " + why);
  }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) fail("unexpected end of data");
  }

  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

}  // namespace zdids::detail
