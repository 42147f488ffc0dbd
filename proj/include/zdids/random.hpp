#pragma once

// Seeded helpers on top of std::mt19937_64, whose output sequence is fixed by
// the standard. The std distributions are implementation-defined, so index
// and real draws are done here to keep runs identical across toolchains.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace zdids {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), rejection sampling to avoid modulo bias.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  // n distinct values from [0, population), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample(std::size_t population, std::size_t n) {
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(pool[i], pool[i + index(population - i)]);
    }
    pool.resize(n);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace zdids
