#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "support/synthetic_kdd.hpp"
#include "zdids/error.hpp"
#include "zdids/preprocess.hpp"
#include "zdids/random.hpp"

namespace zdids {
namespace {

EncodedDataset coarse_dataset(std::size_t n, std::uint64_t seed) {
  const auto records = testing::synthetic_records(n, seed);
  return encode(records, build_schema(records), default_taxonomy(), Granularity::kCoarse);
}

// A dataset whose label vector is given directly; features are the row index.
EncodedDataset labelled(const std::vector<std::uint16_t>& y, std::size_t k) {
  EncodedDataset ds;
  ds.n = y.size();
  ds.d = 1;
  ds.y = y;
  for (std::size_t c = 0; c < k; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < y.size(); ++i) ds.x.push_back(static_cast<float>(i));
  return ds;
}

TEST(Encode, WidthIsContinuousPlusVocabularies) {
  FeatureSchema schema;
  const auto& f = kdd_features();
  schema.features.assign(f.begin(), f.end());
  schema.vocabularies = {std::vector<std::string>(3, "p"), std::vector<std::string>(70, "s"),
                         std::vector<std::string>(11, "f")};
  EXPECT_EQ(schema.continuous_count(), 38u);
  EXPECT_EQ(schema.encoded_width(), 122u);
  schema.vocabularies[1].resize(66);
  EXPECT_EQ(schema.encoded_width(), 118u);
}

TEST(Encode, ColumnLayoutAndOneHot) {
  auto records = testing::synthetic_records(40, 8);
  const auto schema = build_schema(records);
  const auto ds = encode(records, schema, default_taxonomy(), Granularity::kCoarse);
  ASSERT_EQ(ds.d, schema.encoded_width());
  ASSERT_EQ(ds.column_names.size(), ds.d);
  EXPECT_EQ(ds.column_names[0], "duration");
  EXPECT_EQ(ds.column_names[38], "protocol_type=" + schema.vocabularies[0][0]);
  for (std::size_t i = 0; i < ds.n; ++i) {
    std::size_t offset = 38;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& vocab = schema.vocabularies[c];
      float sum = 0.0f;
      for (std::size_t v = 0; v < vocab.size(); ++v) {
        const float cell = ds.x[i * ds.d + offset + v];
        EXPECT_TRUE(cell == 0.0f || cell == 1.0f);
        sum += cell;
        if (cell == 1.0f) EXPECT_EQ(vocab[v], records[i].values[c + 1]);
      }
      EXPECT_EQ(sum, 1.0f);
      offset += vocab.size();
    }
  }
}

TEST(Encode, ConstantColumnScalesToZero) {
  auto records = testing::synthetic_records(30, 4);
  for (auto& r : records) r.values[6] = "7";  // land
  const auto ds = encode(records, build_schema(records), default_taxonomy(), Granularity::kCoarse);
  const auto land = std::find(ds.column_names.begin(), ds.column_names.end(), "land") -
                    ds.column_names.begin();
  for (std::size_t i = 0; i < ds.n; ++i) EXPECT_EQ(ds.x[i * ds.d + land], 0.0f);
}

TEST(Encode, CoarseGranularityHasFourClasses) {
  const auto ds = coarse_dataset(100, 2);
  EXPECT_EQ(ds.num_classes(), 4u);
  EXPECT_EQ(ds.class_names,
            (std::vector<std::string>{"Normal", "DoS", "Probe", "UnauthorizedAccess"}));
  EXPECT_EQ(ds.granularity, "coarse");
}

TEST(Encode, FineLabelsAreSortedDistinctLabels) {
  const auto records = testing::synthetic_records(500, 3);
  const auto ds = encode(records, build_schema(records), default_taxonomy(), Granularity::kFine);
  std::set<std::string> labels;
  for (const auto& r : records) labels.insert(r.label);
  EXPECT_EQ(ds.class_names, std::vector<std::string>(labels.begin(), labels.end()));
  for (std::size_t i = 0; i < ds.n; ++i) EXPECT_EQ(ds.class_names[ds.y[i]], records[i].label);
}

TEST(Encode, ClassHistogramMatchesCoarseCounts) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto records = testing::synthetic_records(300, seed);
    const auto ds =
        encode(records, build_schema(records), default_taxonomy(), Granularity::kCoarse);
    const auto counts = coarse_counts(records, default_taxonomy());
    std::array<std::uint64_t, 4> hist{};
    for (auto y : ds.y) ++hist[y];
    EXPECT_EQ(hist, counts.counts);
  }
}

TEST(Encode, UnknownCategoryAndLabel) {
  auto records = testing::synthetic_records(20, 1);
  const auto schema = build_schema(records);
  auto bad = records;
  bad[5].values[2] = "gopher_unseen";
  try {
    encode(bad, schema, default_taxonomy(), Granularity::kCoarse);
    FAIL();
  } catch (const UnknownCategory& e) {
    EXPECT_EQ(e.feature, "service");
    EXPECT_EQ(e.value, "gopher_unseen");
  }
  bad = records;
  bad[2].label = "alien";
  EXPECT_THROW(encode(bad, schema, default_taxonomy(), Granularity::kCoarse), UnknownLabel);
}

TEST(Scaling, FittedDataLiesInUnitIntervalAndOtherDataMayExceedIt) {
  const auto records = testing::synthetic_records(200, 6);
  const auto schema = build_schema(records);
  const std::vector<RawRecord> fit_part(records.begin(), records.begin() + 100);
  const auto fitted = encode(fit_part, schema, default_taxonomy(), Granularity::kCoarse);
  for (std::size_t i = 0; i < fitted.n; ++i) {
    for (std::size_t c = 0; c < 38; ++c) {
      const float v = fitted.x[i * fitted.d + c];
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  auto wide = std::vector<RawRecord>(records.begin() + 100, records.end());
  wide[0].values[4] = "1000000";
  const auto other = encode(wide, schema, default_taxonomy(), Granularity::kCoarse, fitted.scaling);
  EXPECT_GT(other.x[1], 1.0f);  // src_bytes, continuous column 1
  EXPECT_EQ(other.scaling, fitted.scaling);
}

TEST(Granularity, SwapKeepsBothColumns) {
  const auto records = testing::synthetic_records(100, 12);
  const auto schema = build_schema(records);
  std::set<std::string> labels;
  for (const auto& r : records) labels.insert(r.label);
  Encoder enc(schema, default_taxonomy(), Granularity::kFine,
              std::vector<std::string>(labels.begin(), labels.end()), true);
  for (const auto& r : records) enc.add(r);
  const auto fine = std::move(enc).finish();
  ASSERT_EQ(fine.extra_labels.size(), 1u);
  const auto coarse = with_granularity(fine, "coarse");
  EXPECT_EQ(coarse.num_classes(), 4u);
  EXPECT_EQ(coarse.extra_labels[0].granularity, "fine");
  EXPECT_EQ(with_granularity(coarse, "fine"), fine);
  for (std::size_t i = 0; i < fine.n; ++i) {
    const auto cat = default_taxonomy().at(fine.class_names[fine.y[i]]);
    EXPECT_EQ(coarse.y[i], static_cast<std::uint16_t>(cat));
  }
  EXPECT_THROW(with_granularity(fine, "medium"), UsageError);
}

// Frozen from an independent largest-remainder computation over the per-label
// counts of the full KDD99 file (labels in sorted order).
TEST(Split, FullKddAllocation) {
  const std::vector<std::uint64_t> counts = {
      2203, 30,   8,      53,     12,  12481, 21,    9,   7,  1072017, 2316, 972781,
      3,    4,    264,    10413,  10,  15892, 2807886, 2, 979, 1020,   20};
  const std::vector<std::size_t> expected = {
      727, 10,  3,      18,     4,  4119, 7,      3,   2, 353766, 764, 321018,
      1,   1,   87,     3436,   3,  5244, 926602, 1,     323, 337,  7};
  const auto alloc = stratified_allocation(counts, 0.33);
  EXPECT_EQ(alloc, expected);
  EXPECT_EQ(std::accumulate(alloc.begin(), alloc.end(), std::size_t{0}), 1616483u);
}

TEST(Split, TwoSampleClassSplitsOneOne) {
  const std::vector<std::uint64_t> counts = {2};
  EXPECT_EQ(stratified_allocation(counts, 0.33), std::vector<std::size_t>{1});
}

TEST(Split, SingletonClassStaysInTrain) {
  const std::vector<std::uint64_t> counts = {1, 10};
  const auto alloc = stratified_allocation(counts, 0.33);
  EXPECT_EQ(alloc[0], 0u);
}

TEST(Split, RejectsBadFraction) {
  const std::vector<std::uint64_t> counts = {5, 5};
  EXPECT_THROW(stratified_allocation(counts, 0.0), UsageError);
  EXPECT_THROW(stratified_allocation(counts, 1.0), UsageError);
  const std::vector<std::uint64_t> with_empty = {5, 0};
  EXPECT_THROW(stratified_allocation(with_empty, 0.33), DegenerateClass);
}

// Properties over random class-count vectors: the allocation stays within one
// row of n_c f for every class, and the split partitions the rows.
TEST(Split, PartitionAndStratificationBoundProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(8);
    std::vector<std::uint16_t> y;
    std::vector<std::uint64_t> counts(k);
    for (std::size_t c = 0; c < k; ++c) {
      counts[c] = 1 + rng.index(trial % 3 == 0 ? 5 : 60);
      y.insert(y.end(), counts[c], static_cast<std::uint16_t>(c));
    }
    Rng(trial).shuffle(std::span<std::uint16_t>(y));
    const double f = 0.05 + 0.9 * rng.uniform01();
    const auto ds = labelled(y, k);
    const auto split = stratified_split(ds, f, trial);

    std::vector<std::size_t> all = split.train_rows;
    all.insert(all.end(), split.test_rows.begin(), split.test_rows.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(ds.n);
    std::iota(expected.begin(), expected.end(), 0);
    ASSERT_EQ(all, expected) << "trial " << trial;

    std::vector<std::uint64_t> test_counts(k);
    for (auto label : split.test.y) ++test_counts[label];
    for (std::size_t c = 0; c < k; ++c) {
      EXPECT_LT(std::abs(static_cast<double>(test_counts[c]) - counts[c] * f), 1.0)
          << "trial " << trial << " class " << c;
      if (counts[c] == 1) {
        EXPECT_EQ(test_counts[c], 0u);
      }
    }
    // rows keep their features: x encodes the original row index
    for (std::size_t i = 0; i < split.test.n; ++i) {
      EXPECT_EQ(split.test.x[i], static_cast<float>(split.test_rows[i]));
      EXPECT_EQ(split.test.y[i], ds.y[split.test_rows[i]]);
    }
  }
}

TEST(Split, DeterministicPerSeed) {
  const auto ds = coarse_dataset(500, 1);
  const auto a = stratified_split(ds, 0.33, 42);
  const auto b = stratified_split(ds, 0.33, 42);
  const auto c = stratified_split(ds, 0.33, 43);
  EXPECT_EQ(a.test_rows, b.test_rows);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test_rows, c.test_rows);
  EXPECT_EQ(a.test.n, c.test.n);
}

TEST(Weights, HandArithmetic) {
  std::vector<std::uint16_t> y(90, 0);
  y.insert(y.end(), 10, 1);
  const auto w = class_weights(y, 2);
  ASSERT_EQ(w.w.size(), 2u);
  EXPECT_NEAR(w.w[0], 0.2, 1e-15);
  EXPECT_NEAR(w.w[1], 1.8, 1e-15);
}

TEST(Weights, BalancedIsExactlyOnes) {
  for (std::size_t k = 1; k <= 7; ++k) {
    std::vector<std::uint16_t> y;
    for (std::size_t r = 0; r < 13; ++r) {
      for (std::size_t c = 0; c < k; ++c) y.push_back(static_cast<std::uint16_t>(c));
    }
    for (double w : class_weights(y, k).w) EXPECT_EQ(w, 1.0);
  }
}

TEST(Weights, CoarseKddPutsLargestWeightOnUnauthorizedAccess) {
  // Category totals in Normal, DoS, Probe, UnauthorizedAccess order.
  const std::array<std::size_t, 4> counts = {972781, 3883370, 41102, 1178};
  std::vector<std::uint16_t> y;
  for (std::size_t c = 0; c < 4; ++c) y.insert(y.end(), counts[c], static_cast<std::uint16_t>(c));
  const auto w = class_weights(y, 4);
  EXPECT_EQ(std::max_element(w.w.begin(), w.w.end()) - w.w.begin(), 3);
  EXPECT_NEAR(std::accumulate(w.w.begin(), w.w.end(), 0.0) / 4.0, 1.0, 1e-12);
}

TEST(Weights, MissingClassThrows) {
  const std::vector<std::uint16_t> y = {0, 0, 2};
  try {
    class_weights(y, 3);
    FAIL();
  } catch (const MissingClass& e) {
    EXPECT_EQ(e.cls, 1u);
  }
}

TEST(Sample, FullSampleIsPermutation) {
  const auto ds = coarse_dataset(60, 5);
  const auto rows = sample_indices(ds.n, ds.n, 9);
  std::vector<std::size_t> sorted = rows;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> expected(ds.n);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(sorted, expected);
  const auto sampled = sample_rows(ds, ds.n, 9);
  EXPECT_EQ(sampled, subset(ds, rows));
}

TEST(Sample, DistinctAndDeterministic) {
  const auto a = sample_indices(1000, 50, 3);
  EXPECT_EQ(a, sample_indices(1000, 50, 3));
  EXPECT_NE(a, sample_indices(1000, 50, 4));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 50u);
  EXPECT_THROW(sample_indices(10, 0, 1), OutOfRange);
  EXPECT_THROW(sample_indices(10, 11, 1), OutOfRange);
}

TEST(Container, RoundTrip) {
  const auto records = testing::synthetic_records(150, 21);
  const auto schema = build_schema(records);
  std::set<std::string> labels;
  for (const auto& r : records) labels.insert(r.label);
  Encoder enc(schema, default_taxonomy(), Granularity::kFine,
              std::vector<std::string>(labels.begin(), labels.end()), true);
  for (const auto& r : records) enc.add(r);
  auto ds = std::move(enc).finish();
  apply_scaling(ds, fit_scaling(ds, schema.continuous_count()));

  std::stringstream ss;
  write_container(ss, ds);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "ZIDS");
  std::istringstream in(bytes);
  EXPECT_EQ(read_container(in), ds);

  std::stringstream again;
  write_container(again, ds);
  EXPECT_EQ(again.str(), bytes);
}

TEST(Container, TruncationAndVersionErrors) {
  const auto ds = coarse_dataset(30, 2);
  std::stringstream ss;
  write_container(ss, ds);
  const std::string bytes = ss.str();
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream in(bytes.substr(0, cut));
    EXPECT_THROW(read_container(in), CorruptModel) << "cut " << cut;
  }
  std::string versioned = bytes;
  versioned[4] = 9;
  std::istringstream vin(versioned);
  EXPECT_THROW(read_container(vin), VersionMismatch);
  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  std::istringstream min(wrong_magic);
  EXPECT_THROW(read_container(min), CorruptModel);
  EXPECT_THROW(load_container("/nonexistent/dir/x.zids"), IoError);
}

}  // namespace
}  // namespace zdids
