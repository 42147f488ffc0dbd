#include "zdids/experiment.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "zdids/error.hpp"
#include "zdids/kernels.hpp"

namespace zdids::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_base(std::string_view command) {
  return {{"command", command},
          {"tool_version", kToolVersion},
          {"created_at", utc_timestamp()},
          {"threads", kernels::max_threads()}};
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw UsageError("optimizer: unknown value '" + std::string(name) + "' (adam | sgd)");
}

json schema_json(const FeatureSchema& schema, const std::map<std::string, std::uint64_t>& labels) {
  json features = json::array();
  for (const auto& f : schema.features) {
    features.push_back({{"name", f.name},
                        {"kind", f.kind == FeatureKind::kCategorical ? "categorical" : "continuous"}});
  }
  json vocab = json::object();
  const auto cats = schema.categorical_positions();
  for (std::size_t c = 0; c < cats.size(); ++c) {
    vocab[schema.features[cats[c]].name] = schema.vocabularies[c];
  }
  json label_counts = json::object();
  for (const auto& [label, n] : labels) label_counts[label] = n;
  return {{"features", features},
          {"vocabularies", vocab},
          {"continuous_count", schema.continuous_count()},
          {"encoded_width", schema.encoded_width()},
          {"labels", label_counts}};
}

json schema_summary(const FeatureSchema& schema) {
  json sizes = json::object();
  const auto cats = schema.categorical_positions();
  for (std::size_t c = 0; c < cats.size(); ++c) {
    sizes[schema.features[cats[c]].name] = schema.vocabularies[c].size();
  }
  return {{"vocabulary_sizes", sizes}, {"d", schema.encoded_width()}};
}

json counts_json(const CategoryCounts& counts) {
  json j = json::object();
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    j[std::string(category_name(static_cast<Category>(c)))] = counts.counts[c];
  }
  return j;
}

std::string file_safe(std::string_view name) {
  std::string out;
  for (char ch : name) {
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') ? ch : '_';
  }
  return out;
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kBase:
      return "base";
    case Variant::kWeightedBase:
      return "weighted-base";
    case Variant::kTruncated:
      return "truncated";
    case Variant::kWeightedTruncated:
      return "weighted-truncated";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kBase, Variant::kWeightedBase, Variant::kTruncated,
                    Variant::kWeightedTruncated}) {
    if (variant_name(v) == name) return v;
  }
  throw UsageError("variant: unknown value '" + std::string(name) +
                   "' (base | weighted-base | truncated | weighted-truncated)");
}

Granularity variant_granularity(Variant v) {
  return v == Variant::kBase || v == Variant::kWeightedBase ? Granularity::kFine
                                                            : Granularity::kCoarse;
}

bool variant_weighted(Variant v) {
  return v == Variant::kWeightedBase || v == Variant::kWeightedTruncated;
}

std::vector<std::size_t> default_dims(Variant v, std::size_t input_width, std::size_t num_classes) {
  if (variant_granularity(v) == Granularity::kFine) return {input_width, 256, 112, num_classes};
  return {input_width, 112, num_classes};
}

std::uint64_t ExperimentConfig::resolved_split_seed() const {
  return split_seed.value_or(seed.value_or(kDefaultSeed));
}
std::uint64_t ExperimentConfig::resolved_train_seed() const {
  return train_seed.value_or(seed.value_or(kDefaultSeed));
}
std::uint64_t ExperimentConfig::resolved_shap_seed() const {
  return shap_seed.value_or(seed.value_or(kDefaultSeed));
}

void merge_config_json(ExperimentConfig& c, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "data_path") c.data_path = value.get<std::string>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "variant") c.variant = parse_variant(value.get<std::string>());
      else if (key == "dims") c.dims = value.get<std::vector<std::size_t>>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "optimizer") c.optimizer = parse_optimizer(value.get<std::string>());
      else if (key == "beta1") c.beta1 = value.get<double>();
      else if (key == "beta2") c.beta2 = value.get<double>();
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "test_fraction") c.test_fraction = value.get<double>();
      else if (key == "background_n") c.background_n = value.get<std::size_t>();
      else if (key == "explain_n") c.explain_n = value.get<std::size_t>();
      else if (key == "budget") c.budget = value.get<std::size_t>();
      else if (key == "top_k") c.top_k = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "split_seed") c.split_seed = value.get<std::uint64_t>();
      else if (key == "train_seed") c.train_seed = value.get<std::uint64_t>();
      else if (key == "shap_seed") c.shap_seed = value.get<std::uint64_t>();
      else throw UsageError("config: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw UsageError("config: bad value for '" + key + "': " + e.what());
    }
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json j = {{"data_path", c.data_path.string()},
            {"output_dir", c.output_dir.string()},
            {"variant", variant_name(c.variant)},
            {"dims", c.dims},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"optimizer", optimizer_name(c.optimizer)},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon},
            {"test_fraction", c.test_fraction},
            {"background_n", c.background_n},
            {"explain_n", c.explain_n},
            {"top_k", c.top_k},
            {"split_seed", c.resolved_split_seed()},
            {"train_seed", c.resolved_train_seed()},
            {"shap_seed", c.resolved_shap_seed()}};
  if (c.budget) j["budget"] = *c.budget;
  if (c.seed) j["seed"] = *c.seed;
  return j.dump(2);
}

OutputLock::OutputLock(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  path_ = dir / ".zdids.lock";
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    const int err = errno;
    path_.clear();
    if (err == EEXIST) {
      throw UsageError("output directory " + dir.string() + " is locked by another command");
    }
    throw IoError("cannot lock " + dir.string() + ": " + std::strerror(err));
  }
  ::close(fd);
}

OutputLock::~OutputLock() {
  if (!path_.empty()) {
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

PrepareResult run_prepare(const ExperimentConfig& config) {
  if (config.output_dir.empty()) throw UsageError("output_dir is required");
  if (config.data_path.empty()) throw UsageError("data_path is required");
  OutputLock lock(config.output_dir);
  const LabelTaxonomy taxonomy = default_taxonomy();

  SchemaBuilder builder;
  {
    auto in = open_input(config.data_path);
    for_each_kdd_record(in, [&](RawRecord&& r) { builder.add(r); });
  }
  PrepareResult result;
  result.schema = builder.build();
  result.label_counts = builder.label_counts();
  result.counts = coarse_counts(result.label_counts, taxonomy);

  std::vector<std::string> fine_labels;
  for (const auto& [label, n] : result.label_counts) fine_labels.push_back(label);

  EncodedDataset raw;
  {
    Encoder encoder(result.schema, taxonomy, Granularity::kFine, fine_labels, true);
    encoder.reserve(builder.records_seen());
    auto in = open_input(config.data_path);
    for_each_kdd_record(in, [&](RawRecord&& r) { encoder.add(r); });
    raw = std::move(encoder).finish();
  }

  Split split = stratified_split(raw, config.test_fraction, config.resolved_split_seed());
  raw = EncodedDataset{};
  const Scaling scaling = fit_scaling(split.train, result.schema.continuous_count());
  apply_scaling(split.train, scaling);
  apply_scaling(split.test, scaling);
  result.train_rows = split.train.n;
  result.test_rows = split.test.n;

  const fs::path& out = config.output_dir;
  save_container(split.train, out / "train.zids");
  save_container(split.test, out / "test.zids");
  write_text(out / "schema.json", schema_json(result.schema, result.label_counts).dump(2) + "\n");
  {
    std::ostringstream csv;
    write_counts_csv(csv, result.counts);
    write_text(out / "counts.csv", csv.str());
  }

  json manifest = manifest_base("prepare");
  manifest["config"] = json::parse(config_to_json(config));
  manifest["seeds"] = {{"split_seed", config.resolved_split_seed()}};
  manifest["schema"] = schema_summary(result.schema);
  manifest["records"] = builder.records_seen();
  manifest["category_counts"] = counts_json(result.counts);
  manifest["train_rows"] = result.train_rows;
  manifest["test_rows"] = result.test_rows;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

EncodedDataset labels_for_model(const EncodedDataset& ds, const MlpModel& model) {
  auto matches = [&](const std::vector<std::string>& names) {
    return model.class_names.empty() ? names.size() == model.num_classes()
                                     : names == model.class_names;
  };
  if (matches(ds.class_names)) return ds;
  for (const auto& col : ds.extra_labels) {
    if (matches(col.class_names)) return with_granularity(ds, col.granularity);
  }
  throw ShapeMismatch("no label column in the dataset matches the model's " +
                      std::to_string(model.num_classes()) + " classes");
}

TrainOutcome run_train(const ExperimentConfig& config) {
  if (config.output_dir.empty()) throw UsageError("output_dir is required");
  if (config.data_path.empty()) throw UsageError("data_path is required");

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.learning_rate = config.learning_rate;
  tc.optimizer = config.optimizer;
  tc.beta1 = config.beta1;
  tc.beta2 = config.beta2;
  tc.epsilon = config.epsilon;
  tc.seed = config.resolved_train_seed();
  tc.validate();

  OutputLock lock(config.output_dir);
  const auto granularity = std::string(granularity_name(variant_granularity(config.variant)));
  const EncodedDataset train_ds =
      with_granularity(load_container(config.data_path / "train.zids"), granularity);
  const EncodedDataset val_ds =
      with_granularity(load_container(config.data_path / "test.zids"), granularity);

  auto dims = config.dims.empty()
                  ? default_dims(config.variant, train_ds.d, train_ds.num_classes())
                  : config.dims;
  if (dims.size() < 2 || dims.front() != train_ds.d || dims.back() != train_ds.num_classes()) {
    throw UsageError("dims: must start with the input width " + std::to_string(train_ds.d) +
                     " and end with the class count " + std::to_string(train_ds.num_classes()));
  }

  TrainOutcome outcome;
  if (variant_weighted(config.variant)) {
    outcome.weights = class_weights(train_ds.y, train_ds.num_classes());
    tc.class_weights = outcome.weights;
  }

  MlpModel model = init_model(dims, tc.seed);
  model.class_names = train_ds.class_names;
  auto result = train(std::move(model), train_ds, val_ds, tc, [&](int epoch, const EpochStats& s) {
    std::cerr << "epoch " << epoch << "/" << tc.epochs << "  train_loss " << s.train_loss
              << "  val_loss " << s.val_loss << "  val_accuracy " << s.val_accuracy << "\n";
  });
  outcome.model = std::move(result.model);
  outcome.history = std::move(result.history);

  const fs::path& out = config.output_dir;
  save_model(outcome.model, out / "model.zmlp");
  {
    std::ostringstream csv;
    write_history_csv(csv, outcome.history);
    write_text(out / "history.csv", csv.str());
  }
  json manifest = manifest_base("train");
  manifest["config"] = json::parse(config_to_json(config));
  manifest["seeds"] = {{"train_seed", tc.seed}};
  manifest["variant"] = variant_name(config.variant);
  manifest["granularity"] = granularity;
  manifest["dims"] = dims;
  manifest["parameter_count"] = count_parameters(outcome.model);
  manifest["schema"] = {{"d", train_ds.d}, {"K", train_ds.num_classes()}};
  manifest["class_names"] = train_ds.class_names;
  manifest["class_weights"] = outcome.weights ? json(outcome.weights->w) : json(nullptr);
  manifest["train_rows"] = train_ds.n;
  manifest["validation_rows"] = val_ds.n;
  manifest["kernel_backend"] = kernels::backend_name(tc.backend);
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

EvaluateOutcome run_evaluate(const fs::path& model_path, const fs::path& test_path,
                             const fs::path& output_dir, const ReportOptions& options) {
  if (output_dir.empty()) throw UsageError("output_dir is required");
  const MlpModel model = load_model(model_path);
  const EncodedDataset test = labels_for_model(load_container(test_path), model);
  if (test.d != model.input_width()) {
    throw UsageError("model input width " + std::to_string(model.input_width()) +
                     " does not match container width " + std::to_string(test.d));
  }
  OutputLock lock(output_dir);
  const auto predicted = predict(model, test);
  EvaluateOutcome outcome;
  outcome.confusion = confusion(test.y, predicted, test.num_classes(), test.class_names);
  outcome.report = report(outcome.confusion, options);

  write_text(output_dir / "report.txt", render_report(outcome.report, ReportFormat::kText));
  write_text(output_dir / "report.csv", render_report(outcome.report, ReportFormat::kCsv));
  write_text(output_dir / "report.json", render_report(outcome.report, ReportFormat::kJson));
  write_text(output_dir / "confusion.csv", render_confusion_csv(outcome.confusion));

  json manifest = manifest_base("evaluate");
  manifest["model"] = model_path.string();
  manifest["test_container"] = test_path.string();
  manifest["seeds"] = json::object();
  manifest["zero_division"] = options.zero_division;
  manifest["rows"] = test.n;
  manifest["accuracy"] = outcome.report.accuracy;
  manifest["parameter_count"] = count_parameters(model);
  write_text(output_dir / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

ExplainOutcome run_explain(const fs::path& model_path, const fs::path& test_path,
                           const ExperimentConfig& config) {
  if (config.output_dir.empty()) throw UsageError("output_dir is required");
  if (config.top_k < 1) throw UsageError("top_k must be >= 1");
  const MlpModel model = load_model(model_path);
  const EncodedDataset test = labels_for_model(load_container(test_path), model);
  if (test.d != model.input_width()) {
    throw UsageError("model input width " + std::to_string(model.input_width()) +
                     " does not match container width " + std::to_string(test.d));
  }
  OutputLock lock(config.output_dir);

  const std::uint64_t seed = config.resolved_shap_seed();
  ExplainOutcome outcome;
  outcome.background_rows = sample_indices(test.n, config.background_n, seed);
  outcome.explained_rows = sample_indices(test.n, config.explain_n, seed);
  const shap::Background background{to_matrix(test, outcome.background_rows)};
  const Matrix x_rows = to_matrix(test, outcome.explained_rows);
  const std::size_t budget = config.budget.value_or(shap::default_budget(test.d));

  outcome.explanation = shap::kernel_shap(shap::model_fn(model), x_rows, background, budget, seed);
  outcome.explanation.class_names = test.class_names;
  outcome.explanation.feature_names = test.column_names;
  outcome.top = shap::top_features(outcome.explanation, config.top_k);

  const fs::path& out = config.output_dir;
  json residuals = json::object();
  for (std::size_t c = 0; c < outcome.explanation.phi.size(); ++c) {
    const double r = outcome.explanation.efficiency_residual(c);
    outcome.efficiency_residuals.push_back(r);
    residuals[test.class_names[c]] = r;
    std::cerr << "efficiency " << test.class_names[c] << ": max |sum(phi) + base - f(x)| = " << r
              << "\n";
    std::ostringstream csv;
    shap::write_class_csv(csv, outcome.explanation, c);
    write_text(out / ("shap_" + file_safe(test.class_names[c]) + ".csv"), csv.str());
  }
  {
    std::ostringstream csv;
    shap::write_top_features_csv(csv, outcome.explanation, outcome.top);
    write_text(out / ("top" + std::to_string(config.top_k) + ".csv"), csv.str());
  }

  json manifest = manifest_base("explain");
  manifest["model"] = model_path.string();
  manifest["test_container"] = test_path.string();
  manifest["config"] = json::parse(config_to_json(config));
  manifest["seeds"] = {{"shap_seed", seed}};
  manifest["budget"] = budget;
  manifest["coalitions_enumerated"] = shap::is_full_enumeration(test.d, budget);
  manifest["background_rows"] = outcome.background_rows;
  manifest["explained_rows"] = outcome.explained_rows;
  manifest["efficiency_residuals"] = residuals;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

}  // namespace zdids::experiment
