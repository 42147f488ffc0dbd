#pragma once

// Dense encoding of KDD99 records, stratified splitting, class weights and
// the binary dataset container.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zdids/dataset.hpp"

namespace zdids {

enum class Granularity { kFine, kCoarse };

std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view name);

struct MinMax {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const MinMax&) const = default;
};

// Min-max ranges for the continuous columns, in column order.
struct Scaling {
  std::vector<MinMax> ranges;
  bool operator==(const Scaling&) const = default;
};

struct LabelColumn {
  std::string granularity;
  std::vector<std::string> class_names;
  std::vector<std::uint16_t> y;
  bool operator==(const LabelColumn&) const = default;
};

// Row-major N x d matrix plus labels. Columns are the continuous features in
// schema order followed by one one-hot block per categorical feature.
struct EncodedDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> x;
  std::vector<std::uint16_t> y;
  std::vector<std::string> class_names;
  std::string granularity;
  Scaling scaling;
  std::vector<std::string> column_names;
  // Other label columns over the same rows (e.g. coarse labels next to fine).
  std::vector<LabelColumn> extra_labels;

  std::size_t num_classes() const { return class_names.size(); }
  std::span<const float> row(std::size_t i) const { return {x.data() + i * d, d}; }
  bool operator==(const EncodedDataset&) const = default;
};

// Column names: continuous feature names, then "<feature>=<value>" per
// one-hot column.
std::vector<std::string> encoded_column_names(const FeatureSchema& schema);

// Streaming encoder: add records one at a time, then finish(). Values are left
// unscaled; the caller fits and applies a Scaling afterwards.
class Encoder {
 public:
  // `fine_labels` fixes the fine class order; it is only needed when fine
  // labels are requested.
  Encoder(const FeatureSchema& schema, const LabelTaxonomy& taxonomy, Granularity primary,
          std::vector<std::string> fine_labels = {}, bool with_coarse_extra = false);

  void add(const RawRecord& record);
  void reserve(std::size_t rows);
  EncodedDataset finish() &&;

 private:
  FeatureSchema schema_;
  LabelTaxonomy taxonomy_;
  Granularity primary_;
  bool coarse_extra_;
  std::vector<std::string> fine_labels_;
  std::vector<std::size_t> continuous_;
  std::vector<std::size_t> categorical_;
  std::vector<std::size_t> block_offsets_;
  EncodedDataset ds_;
  std::vector<std::uint16_t> coarse_y_;
};

Scaling fit_scaling(const EncodedDataset& ds, std::size_t continuous_count);
// Maps continuous column c to (v - min_c) / (max_c - min_c); min == max maps
// to 0. Values outside the fitted range are allowed.
void apply_scaling(EncodedDataset& ds, const Scaling& scaling);

EncodedDataset encode(std::span<const RawRecord> records, const FeatureSchema& schema,
                      const LabelTaxonomy& taxonomy, Granularity granularity,
                      const std::optional<Scaling>& scaling = std::nullopt);

// Returns a copy whose primary labels are the requested granularity, taken
// from the primary column or one of the extra columns.
EncodedDataset with_granularity(const EncodedDataset& ds, std::string_view granularity);

// Rows in the given order, all label columns carried along.
EncodedDataset subset(const EncodedDataset& ds, std::span<const std::size_t> rows);

// Number of test rows per class: ceil(N * f) rows in total, each class gets
// floor(n_c * f) and the leftover goes one row at a time to the largest
// remainders (lower class index on ties). Classes with one sample are never
// given a test row.
std::vector<std::size_t> stratified_allocation(std::span<const std::uint64_t> class_counts,
                                               double test_fraction);

struct Split {
  EncodedDataset train;
  EncodedDataset test;
  std::vector<std::size_t> train_rows;  // indices into the input, ascending
  std::vector<std::size_t> test_rows;
};

Split stratified_split(const EncodedDataset& ds, double test_fraction, std::uint64_t seed);

struct ClassWeights {
  std::vector<double> w;
};

// Balanced inverse frequency N / (K n_c), rescaled to mean 1.
ClassWeights class_weights(std::span<const std::uint16_t> y, std::size_t num_classes);

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);
EncodedDataset sample_rows(const EncodedDataset& ds, std::size_t n, std::uint64_t seed);

// ---- container ------------------------------------------------------------

inline constexpr std::uint32_t kContainerVersion = 1;

void write_container(std::ostream& out, const EncodedDataset& ds);
EncodedDataset read_container(std::istream& in);
void save_container(const EncodedDataset& ds, const std::filesystem::path& path);
EncodedDataset load_container(const std::filesystem::path& path);

}  // namespace zdids
