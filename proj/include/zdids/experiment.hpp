#pragma once

// End-to-end experiment steps behind the `zdids` command line: prepare,
// train, evaluate, explain, report. Each step writes its artifacts and a
// manifest.json into an output directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zdids/dataset.hpp"
#include "zdids/metrics.hpp"
#include "zdids/mlp.hpp"
#include "zdids/preprocess.hpp"
#include "zdids/shap.hpp"

namespace zdids::experiment {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 42;

// Input widths that reproduce the published model sizes: 62,871 parameters
// for the base network and 13,892 for the truncated one.
inline constexpr std::size_t kReferenceBaseInputWidth = 122;
inline constexpr std::size_t kReferenceTruncatedInputWidth = 119;
inline constexpr std::size_t kReferenceBaseClasses = 23;

enum class Variant { kBase, kWeightedBase, kTruncated, kWeightedTruncated };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
Granularity variant_granularity(Variant v);
bool variant_weighted(Variant v);
// base: [d, 256, 112, K]; truncated: [d, 112, K].
std::vector<std::size_t> default_dims(Variant v, std::size_t input_width, std::size_t num_classes);

struct ExperimentConfig {
  std::filesystem::path data_path;  // KDD file (prepare) or prepared directory (train)
  std::filesystem::path output_dir;
  Variant variant = Variant::kTruncated;
  std::vector<std::size_t> dims;  // empty: default_dims()

  int epochs = 20;
  std::size_t batch_size = 1024;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  double test_fraction = 0.33;

  std::size_t background_n = 50;
  std::size_t explain_n = 50;
  std::optional<std::size_t> budget;  // default 2 M + 2048
  std::size_t top_k = 5;

  std::optional<std::uint64_t> seed;  // fills any unset seed below
  std::optional<std::uint64_t> split_seed;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::uint64_t> shap_seed;

  std::uint64_t resolved_split_seed() const;
  std::uint64_t resolved_train_seed() const;
  std::uint64_t resolved_shap_seed() const;
};

// Flat JSON config; keys match the field names ("variant", "epochs", ...).
// Unknown keys and wrongly typed values raise UsageError naming the key.
void merge_config_json(ExperimentConfig& config, std::string_view json_text);
std::string config_to_json(const ExperimentConfig& config);

// Held while a command writes into a directory; a second holder fails.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct PrepareResult {
  CategoryCounts counts;
  std::map<std::string, std::uint64_t> label_counts;
  FeatureSchema schema;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

// Writes train.zids, test.zids, schema.json, counts.csv, manifest.json.
PrepareResult run_prepare(const ExperimentConfig& config);

struct TrainOutcome {
  MlpModel model;
  TrainHistory history;
  std::optional<ClassWeights> weights;
};

// Reads <data_path>/train.zids and test.zids; writes model.zmlp,
// history.csv, manifest.json.
TrainOutcome run_train(const ExperimentConfig& config);

struct EvaluateOutcome {
  ConfusionMatrix confusion;
  ClassificationReport report;
};

// Writes report.txt, report.csv, report.json, confusion.csv, manifest.json.
EvaluateOutcome run_evaluate(const std::filesystem::path& model_path,
                             const std::filesystem::path& test_path,
                             const std::filesystem::path& output_dir,
                             const ReportOptions& options = {});

struct ExplainOutcome {
  shap::Explanation explanation;
  std::vector<std::vector<shap::RankedFeature>> top;
  std::vector<std::size_t> background_rows;
  std::vector<std::size_t> explained_rows;
  std::vector<double> efficiency_residuals;  // per class
};

// Writes shap_<class>.csv per class, top<k>.csv and manifest.json.
ExplainOutcome run_explain(const std::filesystem::path& model_path,
                           const std::filesystem::path& test_path,
                           const ExperimentConfig& config);

// Picks the label column of `ds` whose class names match the model.
EncodedDataset labels_for_model(const EncodedDataset& ds, const MlpModel& model);

}  // namespace zdids::experiment
