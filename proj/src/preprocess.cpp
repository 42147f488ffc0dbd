#include "zdids/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "zdids/error.hpp"
#include "zdids/random.hpp"

namespace zdids {

std::string_view granularity_name(Granularity g) {
  return g == Granularity::kFine ? "fine" : "coarse";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "fine") return Granularity::kFine;
  if (name == "coarse") return Granularity::kCoarse;
  throw UsageError("unknown granularity '" + std::string(name) + "'");
}

std::vector<std::string> encoded_column_names(const FeatureSchema& schema) {
  std::vector<std::string> names;
  for (std::size_t pos : schema.continuous_positions()) names.push_back(schema.features[pos].name);
  const auto cats = schema.categorical_positions();
  for (std::size_t c = 0; c < cats.size(); ++c) {
    for (const auto& value : schema.vocabularies[c]) {
      names.push_back(schema.features[cats[c]].name + "=" + value);
    }
  }
  return names;
}

Encoder::Encoder(const FeatureSchema& schema, const LabelTaxonomy& taxonomy, Granularity primary,
                 std::vector<std::string> fine_labels, bool with_coarse_extra)
    : schema_(schema),
      taxonomy_(taxonomy),
      primary_(primary),
      coarse_extra_(with_coarse_extra && primary == Granularity::kFine),
      fine_labels_(std::move(fine_labels)),
      continuous_(schema.continuous_positions()),
      categorical_(schema.categorical_positions()) {
  if (schema.vocabularies.size() != categorical_.size()) {
    throw UsageError("schema has " + std::to_string(categorical_.size()) +
                     " categorical features but " + std::to_string(schema.vocabularies.size()) +
                     " vocabularies");
  }
  std::size_t offset = continuous_.size();
  for (const auto& vocab : schema.vocabularies) {
    block_offsets_.push_back(offset);
    offset += vocab.size();
  }
  ds_.d = offset;
  ds_.column_names = encoded_column_names(schema);
  ds_.granularity = std::string(granularity_name(primary));
  if (primary == Granularity::kFine) {
    if (fine_labels_.empty()) throw UsageError("fine granularity needs the fine label list");
    if (fine_labels_.size() > UINT16_MAX) throw UsageError("too many fine labels");
    ds_.class_names = fine_labels_;
  } else {
    ds_.class_names = category_names();
  }
}

void Encoder::reserve(std::size_t rows) {
  ds_.x.reserve(rows * ds_.d);
  ds_.y.reserve(rows);
  if (coarse_extra_) coarse_y_.reserve(rows);
}

void Encoder::add(const RawRecord& record) {
  const std::size_t base = ds_.x.size();
  ds_.x.resize(base + ds_.d, 0.0f);
  float* row = ds_.x.data() + base;

  for (std::size_t c = 0; c < continuous_.size(); ++c) {
    const std::string& s = record.values[continuous_[c]];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v) || v < 0.0) {
      ds_.x.resize(base);
      throw TypeError(ds_.n + 1, continuous_[c]);
    }
    row[c] = static_cast<float>(v);
  }
  for (std::size_t c = 0; c < categorical_.size(); ++c) {
    const auto& vocab = schema_.vocabularies[c];
    const std::string& value = record.values[categorical_[c]];
    auto it = std::lower_bound(vocab.begin(), vocab.end(), value);
    if (it == vocab.end() || *it != value) {
      ds_.x.resize(base);
      throw UnknownCategory(schema_.features[categorical_[c]].name, value);
    }
    row[block_offsets_[c] + static_cast<std::size_t>(it - vocab.begin())] = 1.0f;
  }

  auto fine_index = [&]() -> std::uint16_t {
    auto it = std::find(fine_labels_.begin(), fine_labels_.end(), record.label);
    if (it == fine_labels_.end()) {
      ds_.x.resize(base);
      throw UnknownLabel(record.label);
    }
    return static_cast<std::uint16_t>(it - fine_labels_.begin());
  };
  auto coarse_index = [&]() -> std::uint16_t {
    auto c = taxonomy_.find(record.label);
    if (!c) {
      ds_.x.resize(base);
      throw UnknownLabel(record.label);
    }
    return static_cast<std::uint16_t>(*c);
  };

  if (primary_ == Granularity::kFine) {
    const auto fine = fine_index();
    if (coarse_extra_) coarse_y_.push_back(coarse_index());
    ds_.y.push_back(fine);
  } else {
    ds_.y.push_back(coarse_index());
  }
  ++ds_.n;
}

EncodedDataset Encoder::finish() && {
  ds_.scaling.ranges.assign(continuous_.size(), MinMax{0.0, 1.0});
  if (coarse_extra_) {
    ds_.extra_labels.push_back(
        LabelColumn{std::string(granularity_name(Granularity::kCoarse)), category_names(),
                    std::move(coarse_y_)});
  }
  return std::move(ds_);
}

Scaling fit_scaling(const EncodedDataset& ds, std::size_t continuous_count) {
  Scaling s;
  s.ranges.assign(continuous_count, MinMax{0.0, 0.0});
  if (ds.n == 0) return s;
  for (std::size_t c = 0; c < continuous_count; ++c) {
    s.ranges[c] = {ds.x[c], ds.x[c]};
  }
  for (std::size_t i = 1; i < ds.n; ++i) {
    const float* row = ds.x.data() + i * ds.d;
    for (std::size_t c = 0; c < continuous_count; ++c) {
      s.ranges[c].min = std::min<double>(s.ranges[c].min, row[c]);
      s.ranges[c].max = std::max<double>(s.ranges[c].max, row[c]);
    }
  }
  return s;
}

void apply_scaling(EncodedDataset& ds, const Scaling& scaling) {
  const std::size_t cols = scaling.ranges.size();
  if (cols > ds.d) throw ShapeMismatch("scaling has more columns than the dataset");
  const auto n = static_cast<std::ptrdiff_t>(ds.n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    float* row = ds.x.data() + static_cast<std::size_t>(i) * ds.d;
    for (std::size_t c = 0; c < cols; ++c) {
      const auto [lo, hi] = scaling.ranges[c];
      row[c] = hi > lo ? static_cast<float>((row[c] - lo) / (hi - lo)) : 0.0f;
    }
  }
  ds.scaling = scaling;
}

EncodedDataset encode(std::span<const RawRecord> records, const FeatureSchema& schema,
                      const LabelTaxonomy& taxonomy, Granularity granularity,
                      const std::optional<Scaling>& scaling) {
  std::vector<std::string> fine;
  if (granularity == Granularity::kFine) {
    std::set<std::string> labels;
    for (const auto& r : records) labels.insert(r.label);
    fine.assign(labels.begin(), labels.end());
  }
  Encoder encoder(schema, taxonomy, granularity, std::move(fine));
  encoder.reserve(records.size());
  for (const auto& r : records) encoder.add(r);
  EncodedDataset ds = std::move(encoder).finish();
  const Scaling fitted = scaling ? *scaling : fit_scaling(ds, schema.continuous_count());
  apply_scaling(ds, fitted);
  return ds;
}

EncodedDataset with_granularity(const EncodedDataset& ds, std::string_view granularity) {
  if (ds.granularity == granularity) return ds;
  for (std::size_t i = 0; i < ds.extra_labels.size(); ++i) {
    if (ds.extra_labels[i].granularity != granularity) continue;
    EncodedDataset out = ds;
    LabelColumn previous{out.granularity, std::move(out.class_names), std::move(out.y)};
    out.granularity = out.extra_labels[i].granularity;
    out.class_names = std::move(out.extra_labels[i].class_names);
    out.y = std::move(out.extra_labels[i].y);
    out.extra_labels[i] = std::move(previous);
    return out;
  }
  throw UsageError("dataset has no '" + std::string(granularity) + "' label column");
}

EncodedDataset subset(const EncodedDataset& ds, std::span<const std::size_t> rows) {
  EncodedDataset out;
  out.n = rows.size();
  out.d = ds.d;
  out.class_names = ds.class_names;
  out.granularity = ds.granularity;
  out.scaling = ds.scaling;
  out.column_names = ds.column_names;
  out.x.resize(out.n * out.d);
  out.y.resize(out.n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= ds.n) throw OutOfRange("row index out of range");
    std::copy_n(ds.x.data() + rows[i] * ds.d, ds.d, out.x.data() + i * out.d);
    out.y[i] = ds.y[rows[i]];
  }
  for (const auto& col : ds.extra_labels) {
    LabelColumn c{col.granularity, col.class_names, {}};
    c.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) c.y[i] = col.y[rows[i]];
    out.extra_labels.push_back(std::move(c));
  }
  return out;
}

std::vector<std::size_t> stratified_allocation(std::span<const std::uint64_t> class_counts,
                                               double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test_fraction must lie in (0, 1)");
  }
  const std::uint64_t total = std::accumulate(class_counts.begin(), class_counts.end(),
                                              std::uint64_t{0});
  // 1e-9 absorbs representation error in products such as 0.33 * 100
  const auto target = static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(total) * test_fraction - 1e-9));

  std::vector<std::size_t> alloc(class_counts.size());
  std::vector<double> remainder(class_counts.size());
  std::uint64_t assigned = 0;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    if (class_counts[c] == 0) throw DegenerateClass(c);
    const double quota = static_cast<double>(class_counts[c]) * test_fraction;
    const double floor_q = std::floor(quota + 1e-9);
    alloc[c] = static_cast<std::size_t>(floor_q);
    remainder[c] = std::max(0.0, quota - floor_q);
    assigned += alloc[c];
  }

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    // one extra row must keep |test_c - n_c f| < 1 and leave a training row
    if (class_counts[c] > 1 && remainder[c] > 0.0 && alloc[c] + 1 < class_counts[c]) {
      order.push_back(c);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  const std::uint64_t leftover = target > assigned ? target - assigned : 0;
  for (std::size_t i = 0; i < order.size() && i < leftover; ++i) ++alloc[order[i]];
  return alloc;
}

Split stratified_split(const EncodedDataset& ds, double test_fraction, std::uint64_t seed) {
  const std::size_t k = ds.num_classes();
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < ds.n; ++i) {
    if (ds.y[i] >= k) throw LabelOutOfRange("label " + std::to_string(ds.y[i]) + " >= K");
    by_class[ds.y[i]].push_back(i);
  }
  std::vector<std::uint64_t> counts(k);
  for (std::size_t c = 0; c < k; ++c) counts[c] = by_class[c].size();
  const auto alloc = stratified_allocation(counts, test_fraction);

  Split split;
  Rng rng(seed);
  for (std::size_t c = 0; c < k; ++c) {
    auto& rows = by_class[c];
    rng.shuffle(std::span<std::size_t>(rows));
    split.test_rows.insert(split.test_rows.end(), rows.begin(), rows.begin() + alloc[c]);
    split.train_rows.insert(split.train_rows.end(), rows.begin() + alloc[c], rows.end());
  }
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  split.train = subset(ds, split.train_rows);
  split.test = subset(ds, split.test_rows);
  return split;
}

ClassWeights class_weights(std::span<const std::uint16_t> y, std::size_t num_classes) {
  std::vector<std::uint64_t> counts(num_classes, 0);
  for (auto label : y) {
    if (label >= num_classes) throw LabelOutOfRange("label " + std::to_string(label) + " >= K");
    ++counts[label];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw MissingClass(c);
  }
  const double n = static_cast<double>(y.size());
  const double k = static_cast<double>(num_classes);
  ClassWeights out;
  out.w.resize(num_classes);
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    out.w[c] = n / (k * static_cast<double>(counts[c]));
    sum += out.w[c];
  }
  const double mean = sum / k;
  for (auto& w : out.w) w /= mean;
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n,
                                        std::uint64_t seed) {
  if (n < 1 || n > population) {
    throw OutOfRange("cannot sample " + std::to_string(n) + " rows from " +
                     std::to_string(population));
  }
  Rng rng(seed);
  return rng.sample(population, n);
}

EncodedDataset sample_rows(const EncodedDataset& ds, std::size_t n, std::uint64_t seed) {
  const auto rows = sample_indices(ds.n, n, seed);
  return subset(ds, rows);
}

}  // namespace zdids
