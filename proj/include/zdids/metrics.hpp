#pragma once

// Confusion matrices and per-class classification reports.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zdids {

struct ConfusionMatrix {
  std::size_t k = 0;
  std::vector<std::uint64_t> m;  // k x k, m[true * k + predicted]
  std::vector<std::string> class_names;

  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return m[truth * k + predicted]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;
  bool operator==(const ConfusionMatrix&) const = default;
};

// Class names default to "0".."K-1" when not given.
ConfusionMatrix confusion(std::span<const std::uint16_t> y_true,
                          std::span<const std::uint16_t> y_pred, std::size_t k,
                          std::vector<std::string> class_names = {});

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  bool operator==(const ClassScores&) const = default;
};

struct AverageScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const AverageScores&) const = default;
};

struct ClassificationReport {
  std::vector<std::string> class_names;
  std::vector<ClassScores> per_class;
  double accuracy = 0.0;
  AverageScores macro_avg;
  AverageScores weighted_avg;
  std::uint64_t total_support = 0;
  bool operator==(const ClassificationReport&) const = default;
};

struct ReportOptions {
  // Score used when a ratio has a zero denominator (no predictions for a
  // class, or no support). 1.0 reproduces the base-model tables.
  double zero_division = 1.0;
};

ClassificationReport report(const ConfusionMatrix& cm, const ReportOptions& options = {});

enum class ReportFormat { kText, kCsv, kJson };

// Round half to even at `decimals` places.
double round_half_even(double value, int decimals);

std::string render_report(const ClassificationReport& report, ReportFormat format);
ClassificationReport parse_report_json(std::string_view json);

// Header row and first column hold the class names.
std::string render_confusion_csv(const ConfusionMatrix& cm);

// RFC-4180 field quoting.
std::string csv_field(std::string_view s);

}  // namespace zdids
