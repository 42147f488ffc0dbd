#include <gtest/gtest.h>

#include <sstream>

#include "support/oracles.hpp"
#include "zdids/error.hpp"
#include "zdids/metrics.hpp"

namespace zdids {
namespace {

using Labels = std::vector<std::uint16_t>;

TEST(Confusion, HandCount) {
  const auto cm = confusion(Labels{0, 0, 1}, Labels{0, 1, 1}, 2);
  EXPECT_EQ(cm.m, (std::vector<std::uint64_t>{1, 1, 0, 1}));
  EXPECT_EQ(cm.class_names, (std::vector<std::string>{"0", "1"}));
}

TEST(Confusion, IdentityIsDiagonalAndEmptyIsZero) {
  const Labels y = {2, 0, 1, 2, 2};
  const auto cm = confusion(y, y, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) EXPECT_EQ(cm.at(i, j), 0u);
    }
  }
  EXPECT_EQ(cm.at(2, 2), 3u);
  const auto empty = confusion(Labels{}, Labels{}, 3);
  EXPECT_EQ(empty.total(), 0u);
  EXPECT_EQ(empty.m.size(), 9u);
  EXPECT_THROW(report(empty), EmptyMatrix);
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion(Labels{0, 1}, Labels{0}, 2), ShapeMismatch);
  EXPECT_THROW(confusion(Labels{0, 2}, Labels{0, 1}, 2), LabelOutOfRange);
  EXPECT_THROW(confusion(Labels{0}, Labels{0}, 2, {"only"}), ShapeMismatch);
}

TEST(Report, PerfectPredictionsScoreOne) {
  const Labels y = {0, 1, 2, 3, 1, 1};
  const auto r = report(confusion(y, y, 4));
  for (const auto& s : r.per_class) {
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
    EXPECT_EQ(s.f1, 1.0);
  }
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_avg, (AverageScores{1.0, 1.0, 1.0}));
}

TEST(Report, NeverPredictedClassIsOneZeroZero) {
  // class 2 has support but is never predicted
  const Labels t = {0, 0, 1, 2, 2};
  const Labels p = {0, 0, 1, 0, 1};
  const auto r = report(confusion(t, p, 3));
  EXPECT_EQ(r.per_class[2].precision, 1.0);
  EXPECT_EQ(r.per_class[2].recall, 0.0);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  const auto strict = report(confusion(t, p, 3), ReportOptions{0.0});
  EXPECT_EQ(strict.per_class[2].precision, 0.0);
}

TEST(Report, HandComputedAverages) {
  // [[3,1],[2,4]]
  const Labels t = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  const Labels p = {0, 0, 0, 1, 0, 0, 1, 1, 1, 1};
  const auto r = report(confusion(t, p, 2));
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].precision, 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].recall, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.7);
  EXPECT_DOUBLE_EQ(r.macro_avg.recall, (0.75 + 4.0 / 6.0) / 2.0);
  EXPECT_DOUBLE_EQ(r.weighted_avg.recall, 0.7);
  EXPECT_EQ(r.total_support, 10u);
}

// Property: on random label vectors the report agrees exactly with a direct
// TP/FP/FN count, and weighted-average recall equals accuracy.
TEST(Report, BruteForceProperty) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng.index(6);
    const std::size_t n = 1 + rng.index(80);
    Labels t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<std::uint16_t>(rng.index(k));
      p[i] = rng.uniform01() < 0.5 ? t[i] : static_cast<std::uint16_t>(rng.index(k));
    }
    const auto r = report(confusion(t, p, k));
    const auto b = testing::brute_force_scores(t, p, k);
    EXPECT_EQ(r.accuracy, b.accuracy);
    std::uint64_t supports = 0;
    for (std::size_t c = 0; c < k; ++c) {
      EXPECT_EQ(r.per_class[c].precision, b.precision[c]);
      EXPECT_EQ(r.per_class[c].recall, b.recall[c]);
      EXPECT_EQ(r.per_class[c].f1, b.f1[c]);
      EXPECT_EQ(r.per_class[c].support, b.support[c]);
      supports += r.per_class[c].support;
    }
    EXPECT_EQ(supports, r.total_support);
    EXPECT_NEAR(r.weighted_avg.recall, r.accuracy, 1e-12);
  }
}

TEST(Render, RoundHalfEven) {
  EXPECT_EQ(round_half_even(0.03125, 4), 0.0312);  // 312.5 is exact in binary
  EXPECT_EQ(round_half_even(0.09375, 4), 0.0938);
  EXPECT_EQ(round_half_even(0.5, 0), 0.0);
  EXPECT_EQ(round_half_even(1.5, 0), 2.0);
  EXPECT_EQ(round_half_even(2.5, 0), 2.0);
}

ClassificationReport sample_report() {
  const Labels t = {0, 0, 1, 2, 2, 3, 3, 3};
  const Labels p = {0, 1, 1, 2, 0, 3, 3, 0};
  return report(confusion(t, p, 4, {"Normal", "DoS", "Probe", "UnauthorizedAccess"}));
}

TEST(Render, JsonRoundTrip) {
  const auto r = sample_report();
  const auto json = render_report(r, ReportFormat::kJson);
  const auto back = parse_report_json(json);
  EXPECT_EQ(back, r);
  EXPECT_EQ(render_report(back, ReportFormat::kJson), json);
  EXPECT_THROW(parse_report_json("{\"classes\": 3}"), DataError);
}

TEST(Render, CsvLayout) {
  const auto csv = render_report(sample_report(), ReportFormat::kCsv);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "class,precision,recall,f1,support");
  std::getline(in, line);
  EXPECT_EQ(line, "Normal,0.3333,0.5000,0.4000,2");
  std::vector<std::string> rest;
  while (std::getline(in, line)) rest.push_back(line);
  ASSERT_EQ(rest.size(), 6u);
  EXPECT_EQ(rest[3], "Accuracy,,,0.6250,8");
  EXPECT_EQ(rest[4].rfind("Macro average,", 0), 0u);
  EXPECT_EQ(rest[5].rfind("Weighted average,", 0), 0u);
}

TEST(Render, TextRowsFollowClassOrderThenFooter) {
  const auto text = render_report(sample_report(), ReportFormat::kText);
  const auto pos = [&](const char* s) { return text.find(s); };
  EXPECT_LT(pos("Normal"), pos("DoS"));
  EXPECT_LT(pos("DoS"), pos("Probe"));
  EXPECT_LT(pos("Probe"), pos("UnauthorizedAccess"));
  EXPECT_LT(pos("UnauthorizedAccess"), pos("Accuracy"));
  EXPECT_LT(pos("Accuracy"), pos("Macro average"));
  EXPECT_LT(pos("Macro average"), pos("Weighted average"));
  EXPECT_NE(pos("0.6250"), std::string::npos);
}

TEST(Render, ConfusionCsvAndQuoting) {
  const auto cm = confusion(Labels{0, 1}, Labels{1, 1}, 2, {"a,b", "c\"d"});
  EXPECT_EQ(render_confusion_csv(cm), "true\\predicted,\"a,b\",\"c\"\"d\"\n\"a,b\",0,1\n\"c\"\"d\",0,1\n");
  EXPECT_EQ(csv_field("plain"), "plain");
}

}  // namespace
}  // namespace zdids
