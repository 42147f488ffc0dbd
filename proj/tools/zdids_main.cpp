#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "zdids/error.hpp"
#include "zdids/experiment.hpp"
#include "zdids/metrics.hpp"

namespace fs = std::filesystem;
using namespace zdids;
using namespace zdids::experiment;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flag values collected before the config file is known; applied on top of it.
struct Overrides {
  std::string config_file;
  std::string data_path, output_dir, variant, optimizer;
  std::vector<std::size_t> dims;
  std::optional<int> epochs;
  std::optional<std::size_t> batch_size, background_n, explain_n, budget, top_k;
  std::optional<double> learning_rate, beta1, beta2, epsilon, test_fraction;
  std::optional<std::uint64_t> seed, split_seed, train_seed, shap_seed;

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (!config_file.empty()) merge_config_json(c, read_file(config_file));
    if (!data_path.empty()) c.data_path = data_path;
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (!variant.empty()) c.variant = parse_variant(variant);
    if (!optimizer.empty()) merge_config_json(c, "{\"optimizer\":\"" + optimizer + "\"}");
    if (!dims.empty()) c.dims = dims;
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (background_n) c.background_n = *background_n;
    if (explain_n) c.explain_n = *explain_n;
    if (budget) c.budget = *budget;
    if (top_k) c.top_k = *top_k;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (beta1) c.beta1 = *beta1;
    if (beta2) c.beta2 = *beta2;
    if (epsilon) c.epsilon = *epsilon;
    if (test_fraction) c.test_fraction = *test_fraction;
    if (seed) c.seed = *seed;
    if (split_seed) c.split_seed = *split_seed;
    if (train_seed) c.train_seed = *train_seed;
    if (shap_seed) c.shap_seed = *shap_seed;
    return c;
  }
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "Flat JSON config; flags override it");
  cmd->add_option("--seed", o.seed, "Seed for every seed not set explicitly (default 42)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-day intrusion detection on KDD99: prepare, train, evaluate, explain"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Overrides o;

  auto* prepare = app.add_subcommand("prepare", "Encode a KDD99 file into train/test containers");
  add_common(prepare, o);
  prepare->add_option("--data", o.data_path, "KDD99 CSV file")->required();
  prepare->add_option("--out", o.output_dir, "Output directory (default: prepared)");
  prepare->add_option("--test-fraction", o.test_fraction, "Test share (default 0.33)");
  prepare->add_option("--split-seed", o.split_seed, "Split seed");

  auto* train = app.add_subcommand("train", "Train one model variant");
  add_common(train, o);
  train->add_option("--data", o.data_path, "Prepared directory (default: prepared)");
  train->add_option("--out", o.output_dir, "Output directory (default: runs/<variant>)");
  train->add_option("--variant", o.variant,
                    "base | weighted-base | truncated | weighted-truncated (default truncated)");
  train->add_option("--dims", o.dims, "Layer widths including input and output");
  train->add_option("--epochs", o.epochs, "Epochs (default 20)");
  train->add_option("--batch-size", o.batch_size, "Minibatch size (default 1024)");
  train->add_option("--learning-rate", o.learning_rate, "Step size (default 1e-3)");
  train->add_option("--optimizer", o.optimizer, "adam | sgd (default adam)");
  train->add_option("--beta1", o.beta1, "Adam beta1 (default 0.9)");
  train->add_option("--beta2", o.beta2, "Adam beta2 (default 0.999)");
  train->add_option("--epsilon", o.epsilon, "Adam epsilon (default 1e-8)");
  train->add_option("--train-seed", o.train_seed, "Initialization and shuffling seed");

  std::string model_path, test_path, report_path, report_format = "text";
  double zero_division = 1.0;

  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a test container");
  evaluate->add_option("--model", model_path, "Model file")->required();
  evaluate->add_option("--test", test_path, "Test container (default: prepared/test.zids)");
  evaluate->add_option("--out", o.output_dir, "Output directory (default: <model dir>/evaluate)");
  evaluate->add_option("--zero-division", zero_division,
                       "Precision/recall when the denominator is 0 (default 1)");

  auto* explain = app.add_subcommand("explain", "KernelSHAP attributions for a model");
  add_common(explain, o);
  explain->add_option("--model", model_path, "Model file")->required();
  explain->add_option("--test", test_path, "Test container (default: prepared/test.zids)");
  explain->add_option("--out", o.output_dir, "Output directory (default: <model dir>/explain)");
  explain->add_option("--background-n", o.background_n, "Background rows (default 50)");
  explain->add_option("--explain-n", o.explain_n, "Explained rows (default 50)");
  explain->add_option("--budget", o.budget, "Coalition budget (default 2 M + 2048)");
  explain->add_option("--top-k", o.top_k, "Ranked features per class (default 5)");
  explain->add_option("--shap-seed", o.shap_seed, "Sampling seed");

  auto* report_cmd = app.add_subcommand("report", "Print an existing report.json");
  report_cmd->add_option("report", report_path, "report.json")->required();
  report_cmd->add_option("--format", report_format, "text | csv | json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*prepare) {
      auto c = o.resolve();
      if (c.output_dir.empty()) c.output_dir = "prepared";
      const auto r = run_prepare(c);
      std::cerr << "prepared " << r.train_rows << " train / " << r.test_rows << " test rows, d="
                << r.schema.encoded_width() << " -> " << c.output_dir.string() << "\n";
    } else if (*train) {
      auto c = o.resolve();
      if (c.data_path.empty()) c.data_path = "prepared";
      if (c.output_dir.empty()) c.output_dir = fs::path("runs") / std::string(variant_name(c.variant));
      const auto r = run_train(c);
      std::cerr << "model with " << count_parameters(r.model) << " parameters -> "
                << c.output_dir.string() << "\n";
    } else if (*evaluate) {
      if (test_path.empty()) test_path = "prepared/test.zids";
      fs::path out = o.output_dir.empty() ? fs::path(model_path).parent_path() / "evaluate"
                                          : fs::path(o.output_dir);
      const auto r = run_evaluate(model_path, test_path, out, ReportOptions{zero_division});
      std::cout << render_report(r.report, ReportFormat::kText);
    } else if (*explain) {
      auto c = o.resolve();
      if (test_path.empty()) test_path = "prepared/test.zids";
      if (c.output_dir.empty()) c.output_dir = fs::path(model_path).parent_path() / "explain";
      run_explain(model_path, test_path, c);
    } else if (*report_cmd) {
      const auto r = parse_report_json(read_file(report_path));
      const auto format = report_format == "csv"    ? ReportFormat::kCsv
                          : report_format == "json" ? ReportFormat::kJson
                                                    : ReportFormat::kText;
      std::cout << render_report(r, format);
    }
  } catch (const Error& e) {
    std::cerr << "zdids: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "zdids: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
