#pragma once

// Dense feed-forward classifier: rectifier hidden layers, softmax output,
// class-weighted cross-entropy, Adam/SGD training and a checksummed binary
// model format.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zdids/kernels.hpp"
#include "zdids/preprocess.hpp"

namespace zdids {

// Row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

// Converts the selected dataset rows (all rows when `rows` is empty) to doubles.
Matrix to_matrix(const EncodedDataset& ds, std::span<const std::size_t> rows = {});
Matrix to_matrix(const EncodedDataset& ds, std::size_t first, std::size_t count);

struct DenseLayer {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::vector<double> weights;  // fan_in x fan_out
  std::vector<double> bias;     // fan_out
  bool operator==(const DenseLayer&) const = default;
};

struct MlpModel {
  std::vector<std::size_t> dims;  // [d, h_1, ..., h_L, K]
  std::vector<DenseLayer> layers;
  std::vector<std::string> class_names;  // optional, empty or K entries

  std::size_t input_width() const { return dims.front(); }
  std::size_t num_classes() const { return dims.back(); }
  bool operator==(const MlpModel&) const = default;
};

// Glorot-uniform weights, zero biases. Throws BadDims.
MlpModel init_model(std::vector<std::size_t> dims, std::uint64_t seed);

std::size_t count_parameters(std::span<const std::size_t> dims);
std::size_t count_parameters(const MlpModel& model);

// B x K class probabilities.
Matrix forward(const MlpModel& model, const Matrix& x,
               kernels::Backend backend = kernels::Backend::kOpenMP);

inline constexpr double kLogFloor = 1e-12;

// Weighted mean negative log-likelihood, normalised by the batch's total
// class weight. `weights` may be null (all ones).
double loss(const Matrix& probs, std::span<const std::uint16_t> y, const ClassWeights* weights);

struct Gradients {
  std::vector<DenseLayer> layers;  // same shapes as the model
};

// Analytic gradient of loss(forward(model, x), y, weights).
Gradients gradients(const MlpModel& model, const Matrix& x, std::span<const std::uint16_t> y,
                    const ClassWeights* weights,
                    kernels::Backend backend = kernels::Backend::kOpenMP);

// Argmax per row, lowest index on ties.
std::vector<std::uint16_t> argmax_rows(const Matrix& probs);
std::vector<std::uint16_t> predict(const MlpModel& model, const Matrix& x,
                                   kernels::Backend backend = kernels::Backend::kOpenMP);
// Predictions for a whole dataset, evaluated in chunks.
std::vector<std::uint16_t> predict(const MlpModel& model, const EncodedDataset& ds,
                                   kernels::Backend backend = kernels::Backend::kOpenMP);

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  int epochs = 20;
  std::size_t batch_size = 1024;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::optional<ClassWeights> class_weights;
  kernels::Backend backend = kernels::Backend::kOpenMP;

  void validate() const;  // throws UsageError naming the offending field
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool operator==(const EpochStats&) const = default;
};

using TrainHistory = std::vector<EpochStats>;

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

// Fixed-length training: per epoch a seeded shuffle, minibatch updates, then
// a full validation pass. No early stopping. Throws NonFiniteLoss.
TrainResult train(MlpModel model, const EncodedDataset& train_ds, const EncodedDataset& val_ds,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Loss and accuracy over a whole dataset, evaluated in chunks.
EpochStats evaluate_dataset(const MlpModel& model, const EncodedDataset& ds,
                            const ClassWeights* weights,
                            kernels::Backend backend = kernels::Backend::kOpenMP);

void write_history_csv(std::ostream& out, const TrainHistory& history);

// ---- model files ------------------------------------------------------------

inline constexpr std::uint32_t kModelVersion = 1;

void write_model(std::ostream& out, const MlpModel& model);
MlpModel read_model(std::istream& in);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace zdids
