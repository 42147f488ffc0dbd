#include "zdids/metrics.hpp"

#include <cfenv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "zdids/error.hpp"

namespace zdids {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : m) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k; ++j) s += at(c, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k; ++i) s += at(i, c);
  return s;
}

ConfusionMatrix confusion(std::span<const std::uint16_t> y_true,
                          std::span<const std::uint16_t> y_pred, std::size_t k,
                          std::vector<std::string> class_names) {
  if (y_true.size() != y_pred.size()) {
    throw ShapeMismatch("y_true has " + std::to_string(y_true.size()) + " labels, y_pred " +
                        std::to_string(y_pred.size()));
  }
  if (class_names.empty()) {
    for (std::size_t c = 0; c < k; ++c) class_names.push_back(std::to_string(c));
  } else if (class_names.size() != k) {
    throw ShapeMismatch("class name count differs from K");
  }
  ConfusionMatrix cm;
  cm.k = k;
  cm.m.assign(k * k, 0);
  cm.class_names = std::move(class_names);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= k || y_pred[i] >= k) {
      throw LabelOutOfRange("label at position " + std::to_string(i) + " is >= K=" +
                            std::to_string(k));
    }
    ++cm.m[y_true[i] * k + y_pred[i]];
  }
  return cm;
}

ClassificationReport report(const ConfusionMatrix& cm, const ReportOptions& options) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw EmptyMatrix();

  ClassificationReport r;
  r.class_names = cm.class_names;
  r.total_support = total;
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.k; ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t predicted = cm.col_sum(c);
    const std::uint64_t support = cm.row_sum(c);
    trace += tp;
    ClassScores s;
    s.support = support;
    s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted)
                            : options.zero_division;
    s.recall = support ? static_cast<double>(tp) / static_cast<double>(support)
                       : options.zero_division;
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
    r.per_class.push_back(s);
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);

  const double k = static_cast<double>(cm.k);
  for (const auto& s : r.per_class) {
    r.macro_avg.precision += s.precision / k;
    r.macro_avg.recall += s.recall / k;
    r.macro_avg.f1 += s.f1 / k;
    const double share = static_cast<double>(s.support) / static_cast<double>(total);
    r.weighted_avg.precision += s.precision * share;
    r.weighted_avg.recall += s.recall * share;
    r.weighted_avg.f1 += s.f1 * share;
  }
  return r;
}

double round_half_even(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const int mode = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double rounded = std::nearbyint(value * scale) / scale;
  std::fesetround(mode);
  return rounded;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", round_half_even(v, 4));
  return buf;
}

std::string render_text(const ClassificationReport& r) {
  std::size_t width = 16;  // fits "Weighted average"
  for (const auto& name : r.class_names) width = std::max(width, name.size());
  std::ostringstream out;
  char buf[256];
  auto line = [&](const std::string& label, const std::string& p, const std::string& rc,
                  const std::string& f1, std::uint64_t support) {
    std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %10llu\n", static_cast<int>(width),
                  label.c_str(), p.c_str(), rc.c_str(), f1.c_str(),
                  static_cast<unsigned long long>(support));
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %10s\n", static_cast<int>(width), "Class",
                "Precision", "Recall", "F1 score", "Support");
  out << buf;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& s = r.per_class[c];
    line(r.class_names[c], fixed4(s.precision), fixed4(s.recall), fixed4(s.f1), s.support);
  }
  out << '\n';
  line("Accuracy", "", "", fixed4(r.accuracy), r.total_support);
  line("Macro average", fixed4(r.macro_avg.precision), fixed4(r.macro_avg.recall),
       fixed4(r.macro_avg.f1), r.total_support);
  line("Weighted average", fixed4(r.weighted_avg.precision), fixed4(r.weighted_avg.recall),
       fixed4(r.weighted_avg.f1), r.total_support);
  return out.str();
}

std::string render_csv(const ClassificationReport& r) {
  std::ostringstream out;
  out << "class,precision,recall,f1,support\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& s = r.per_class[c];
    out << csv_field(r.class_names[c]) << ',' << fixed4(s.precision) << ',' << fixed4(s.recall)
        << ',' << fixed4(s.f1) << ',' << s.support << '\n';
  }
  out << "Accuracy,,," << fixed4(r.accuracy) << ',' << r.total_support << '\n';
  out << "Macro average," << fixed4(r.macro_avg.precision) << ',' << fixed4(r.macro_avg.recall)
      << ',' << fixed4(r.macro_avg.f1) << ',' << r.total_support << '\n';
  out << "Weighted average," << fixed4(r.weighted_avg.precision) << ','
      << fixed4(r.weighted_avg.recall) << ',' << fixed4(r.weighted_avg.f1) << ','
      << r.total_support << '\n';
  return out.str();
}

nlohmann::json averages_json(const AverageScores& a) {
  return {{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
}

AverageScores averages_from(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

std::string render_report(const ClassificationReport& r, ReportFormat format) {
  switch (format) {
    case ReportFormat::kText:
      return render_text(r);
    case ReportFormat::kCsv:
      return render_csv(r);
    case ReportFormat::kJson: {
      nlohmann::json classes = nlohmann::json::array();
      for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const auto& s = r.per_class[c];
        classes.push_back({{"name", r.class_names[c]},
                           {"precision", s.precision},
                           {"recall", s.recall},
                           {"f1", s.f1},
                           {"support", s.support}});
      }
      nlohmann::json j = {{"classes", classes},
                          {"accuracy", r.accuracy},
                          {"macro_avg", averages_json(r.macro_avg)},
                          {"weighted_avg", averages_json(r.weighted_avg)},
                          {"total_support", r.total_support}};
      return j.dump(2) + "\n";
    }
  }
  return {};
}

ClassificationReport parse_report_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ClassificationReport r;
    for (const auto& c : j.at("classes")) {
      r.class_names.push_back(c.at("name").get<std::string>());
      r.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(),
                             c.at("f1").get<double>(), c.at("support").get<std::uint64_t>()});
    }
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_avg = averages_from(j.at("macro_avg"));
    r.weighted_avg = averages_from(j.at("weighted_avg"));
    r.total_support = j.at("total_support").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
}

std::string render_confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& name : cm.class_names) out << ',' << csv_field(name);
  out << '\n';
  for (std::size_t i = 0; i < cm.k; ++i) {
    out << csv_field(cm.class_names[i]);
    for (std::size_t j = 0; j < cm.k; ++j) out << ',' << cm.at(i, j);
    out << '\n';
  }
  return out.str();
}

}  // namespace zdids
