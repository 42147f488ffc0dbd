#pragma once

// Small KDD99-shaped record generator for tests. Labels follow a skewed mix
// over all four categories; feature values carry a category-dependent signal
// plus noise so that a small network can learn most of it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "zdids/dataset.hpp"
#include "zdids/random.hpp"

namespace zdids::testing {

struct LabelShare {
  const char* label;
  double share;
  Category category;
};

inline const std::vector<LabelShare>& synthetic_label_mix() {
  static const std::vector<LabelShare> mix = {
      {"normal", 0.40, Category::kNormal},
      {"smurf", 0.25, Category::kDoS},
      {"neptune", 0.19, Category::kDoS},
      {"back", 0.02, Category::kDoS},
      {"satan", 0.05, Category::kProbe},
      {"ipsweep", 0.04, Category::kProbe},
      {"portsweep", 0.03, Category::kProbe},
      {"guess_passwd", 0.007, Category::kUnauthorizedAccess},
      {"warezclient", 0.008, Category::kUnauthorizedAccess},
      {"buffer_overflow", 0.005, Category::kUnauthorizedAccess},
  };
  return mix;
}

inline std::string fmt_number(double v, bool integral) {
  char buf[32];
  if (integral) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", v);
  }
  return buf;
}

inline RawRecord synthetic_record(Rng& rng) {
  const auto& mix = synthetic_label_mix();
  double u = rng.uniform01();
  std::size_t pick = mix.size() - 1;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    if (u < mix[i].share) {
      pick = i;
      break;
    }
    u -= mix[i].share;
  }
  const auto cat = static_cast<std::size_t>(mix[pick].category);

  static const std::array<std::array<const char*, 3>, kNumCategories> protocols = {{
      {"tcp", "tcp", "udp"},
      {"icmp", "tcp", "icmp"},
      {"tcp", "icmp", "udp"},
      {"tcp", "tcp", "tcp"},
  }};
  static const std::array<std::array<const char*, 4>, kNumCategories> services = {{
      {"http", "smtp", "domain_u", "ftp_data"},
      {"ecr_i", "private", "http", "ecr_i"},
      {"private", "eco_i", "other", "finger"},
      {"ftp", "telnet", "ftp_data", "login"},
  }};
  static const std::array<std::array<const char*, 3>, kNumCategories> flags = {{
      {"SF", "SF", "REJ"},
      {"SF", "S0", "S0"},
      {"REJ", "RSTR", "SF"},
      {"SF", "SF", "RSTO"},
  }};

  RawRecord r;
  r.label = mix[pick].label;
  const auto& features = kdd_features();
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    if (j == 1) {
      r.values[j] = protocols[cat][rng.index(3)];
    } else if (j == 2) {
      r.values[j] = services[cat][rng.index(4)];
    } else if (j == 3) {
      r.values[j] = flags[cat][rng.index(3)];
    } else {
      // Rates live in the last block of features; counts and sizes before it.
      const bool rate = features[j].name.find("rate") != std::string::npos;
      const double signal = static_cast<double>((cat * 7 + j * 3 + pick) % 5) / 4.0;
      const double noise = rng.uniform01();
      if (rate) {
        r.values[j] = fmt_number(std::min(1.0, 0.7 * signal + 0.3 * noise), false);
      } else {
        r.values[j] = fmt_number(std::floor((signal * 40.0 + noise * 10.0) * (j % 3 + 1)), true);
      }
    }
  }
  return r;
}

inline std::vector<RawRecord> synthetic_records(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RawRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synthetic_record(rng));
  return out;
}

inline void write_synthetic_kdd(const std::filesystem::path& path, std::size_t n,
                                std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const auto records = synthetic_records(n, seed);
  write_kdd(out, records);
}

}  // namespace zdids::testing
