#pragma once

// KDD99 connection records: wire format, feature schema and the four-way
// label taxonomy.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zdids {

inline constexpr std::size_t kNumFeatures = 41;
inline constexpr std::size_t kNumFields = kNumFeatures + 1;  // features + label

enum class FeatureKind { kContinuous, kCategorical };

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind;
};

// The 41 KDD99 features in file order.
const std::array<FeatureDescriptor, kNumFeatures>& kdd_features();

struct FeatureSchema {
  std::vector<FeatureDescriptor> features;
  // One sorted, deduplicated vocabulary per categorical feature, in the order
  // the categorical features appear in `features`.
  std::vector<std::vector<std::string>> vocabularies;

  std::vector<std::size_t> categorical_positions() const;
  std::vector<std::size_t> continuous_positions() const;
  std::size_t continuous_count() const { return continuous_positions().size(); }
  // Width after one-hot encoding the categoricals.
  std::size_t encoded_width() const;
};

struct RawRecord {
  std::array<std::string, kNumFeatures> values;
  std::string label;  // lowercase, trailing '.' removed

  bool operator==(const RawRecord&) const = default;
};

// Lowercases and strips surrounding whitespace and one trailing '.'.
std::string normalize_label(std::string_view label);

// Streams records to `sink` one line at a time; memory use is independent of
// the file size. Blank lines are skipped. Throws MalformedLine / TypeError.
void for_each_kdd_record(std::istream& in, const std::function<void(RawRecord&&)>& sink);

std::vector<RawRecord> parse_kdd(std::istream& in);

// One KDD99 line (no newline), label dot-terminated like the public files.
std::string format_kdd(const RawRecord& record);
void write_kdd(std::ostream& out, std::span<const RawRecord> records);

// Accumulates vocabularies (and the fine label set) one record at a time.
class SchemaBuilder {
 public:
  SchemaBuilder();
  void add(const RawRecord& record);
  std::size_t records_seen() const { return seen_; }
  FeatureSchema build() const;  // throws EmptyInput when nothing was added
  // Distinct fine labels, sorted, with their counts.
  const std::map<std::string, std::uint64_t>& label_counts() const { return labels_; }

 private:
  std::vector<std::size_t> categorical_;
  std::vector<std::set<std::string>> seen_values_;
  std::map<std::string, std::uint64_t> labels_;
  std::size_t seen_ = 0;
};

FeatureSchema build_schema(std::span<const RawRecord> records);

enum class Category : std::uint8_t { kNormal = 0, kDoS = 1, kProbe = 2, kUnauthorizedAccess = 3 };
inline constexpr std::size_t kNumCategories = 4;

std::string_view category_name(Category c);
// Normal, DoS, Probe, UnauthorizedAccess.
std::vector<std::string> category_names();

class LabelTaxonomy {
 public:
  using Map = std::map<std::string, Category, std::less<>>;

  LabelTaxonomy() = default;
  explicit LabelTaxonomy(Map mapping) : mapping_(std::move(mapping)) {}

  std::optional<Category> find(std::string_view label) const;
  Category at(std::string_view label) const;  // throws UnknownLabel
  const Map& mapping() const { return mapping_; }

 private:
  Map mapping_;
};

LabelTaxonomy default_taxonomy();

struct CategoryCounts {
  std::array<std::uint64_t, kNumCategories> counts{};

  std::uint64_t& operator[](Category c) { return counts[static_cast<std::size_t>(c)]; }
  std::uint64_t operator[](Category c) const { return counts[static_cast<std::size_t>(c)]; }
  std::uint64_t total() const;
  bool operator==(const CategoryCounts&) const = default;
};

CategoryCounts coarse_counts(std::span<const RawRecord> records, const LabelTaxonomy& taxonomy);
CategoryCounts coarse_counts(const std::map<std::string, std::uint64_t>& label_counts,
                             const LabelTaxonomy& taxonomy);

// `category,count` rows in the DoS, Normal, Probe, UnauthorizedAccess order.
void write_counts_csv(std::ostream& out, const CategoryCounts& counts);

}  // namespace zdids
