#include "zdids/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "zdids/error.hpp"
#include "zdids/random.hpp"

namespace zdids {

namespace {

constexpr std::size_t kEvalChunk = 8192;

double class_weight(const ClassWeights* weights, std::uint16_t label) {
  return weights ? weights->w[label] : 1.0;
}

void check_input(const MlpModel& model, const Matrix& x) {
  if (model.layers.empty()) throw BadDims("model has no layers");
  if (x.cols != model.input_width()) {
    throw ShapeMismatch("input width " + std::to_string(x.cols) + " != model input width " +
                        std::to_string(model.input_width()));
  }
}

void check_labels(std::span<const std::uint16_t> y, std::size_t rows, std::size_t k) {
  if (y.size() != rows) {
    throw ShapeMismatch("label count " + std::to_string(y.size()) + " != rows " +
                        std::to_string(rows));
  }
  for (auto label : y) {
    if (label >= k) throw ShapeMismatch("label " + std::to_string(label) + " >= K");
  }
}

void check_weights(const ClassWeights* weights, std::size_t k) {
  if (weights && weights->w.size() != k) {
    throw ShapeMismatch("class weight count " + std::to_string(weights->w.size()) + " != K " +
                        std::to_string(k));
  }
}

// activations[0] = x, activations[l] = output of layer l-1 (post-activation),
// the last entry holds the softmax probabilities.
std::vector<Matrix> forward_all(const MlpModel& model, const Matrix& x, kernels::Backend backend) {
  check_input(model, x);
  std::vector<Matrix> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Matrix out(x.rows, layer.fan_out);
    kernels::affine(backend, acts.back().data, x.rows, layer.fan_in, layer.weights,
                    layer.fan_out, layer.bias, out.data);
    if (l + 1 < model.layers.size()) {
      kernels::relu(backend, out.data);
    } else {
      kernels::softmax_rows(backend, out.data, out.rows, out.cols);
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

double weighted_nll_sum(const Matrix& probs, std::span<const std::uint16_t> y,
                        const ClassWeights* weights, double& weight_sum) {
  double total = 0.0;
  weight_sum = 0.0;
  for (std::size_t b = 0; b < probs.rows; ++b) {
    const double w = class_weight(weights, y[b]);
    total += w * -std::log(probs(b, y[b]) + kLogFloor);
    weight_sum += w;
  }
  return total;
}

// Fills `grads` and returns the batch loss.
double backprop(const MlpModel& model, const Matrix& x, std::span<const std::uint16_t> y,
                const ClassWeights* weights, kernels::Backend backend, Gradients& grads) {
  auto acts = forward_all(model, x, backend);
  const std::size_t rows = x.rows;
  const std::size_t k = model.num_classes();
  check_labels(y, rows, k);
  check_weights(weights, k);

  double weight_sum = 0.0;
  const double nll = weighted_nll_sum(acts.back(), y, weights, weight_sum);

  grads.layers.resize(model.layers.size());
  Matrix delta = std::move(acts.back());
  for (std::size_t b = 0; b < rows; ++b) {
    const double scale = class_weight(weights, y[b]) / weight_sum;
    auto row = delta.row(b);
    row[y[b]] -= 1.0;
    for (double& v : row) v *= scale;
  }

  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    auto& g = grads.layers[l];
    g.fan_in = layer.fan_in;
    g.fan_out = layer.fan_out;
    g.weights.resize(layer.weights.size());
    g.bias.resize(layer.bias.size());
    const Matrix& input = acts[l];
    kernels::affine_grad_params(backend, input.data, rows, layer.fan_in, delta.data,
                                layer.fan_out, g.weights, g.bias);
    if (l == 0) break;
    Matrix prev(rows, layer.fan_in);
    kernels::affine_grad_input(backend, delta.data, rows, layer.fan_out, layer.weights,
                               layer.fan_in, prev.data);
    kernels::relu_backward(backend, input.data, prev.data);
    delta = std::move(prev);
  }
  return weight_sum > 0.0 ? nll / weight_sum : 0.0;
}

class Optimizer {
 public:
  Optimizer(const MlpModel& model, const TrainConfig& config) : config_(config) {
    if (config.optimizer == OptimizerKind::kAdam) {
      for (const auto& layer : model.layers) {
        m_.emplace_back(layer.weights.size(), 0.0);
        m_.emplace_back(layer.bias.size(), 0.0);
      }
      v_ = m_;
    }
  }

  void step(MlpModel& model, const Gradients& grads) {
    ++t_;
    std::size_t slot = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      update(model.layers[l].weights, grads.layers[l].weights, slot++);
      update(model.layers[l].bias, grads.layers[l].bias, slot++);
    }
  }

 private:
  void update(std::vector<double>& params, const std::vector<double>& grad, std::size_t slot) {
    const double lr = config_.learning_rate;
    if (config_.optimizer == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
      return;
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    auto& m = m_[slot];
    auto& v = v_[slot];
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }

  const TrainConfig& config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t t_ = 0;
};

void check_dataset(const MlpModel& model, const EncodedDataset& ds, const char* which) {
  if (ds.d != model.input_width()) {
    throw ShapeMismatch(std::string(which) + " width " + std::to_string(ds.d) +
                        " != model input width " + std::to_string(model.input_width()));
  }
  for (auto label : ds.y) {
    if (label >= model.num_classes()) {
      throw ShapeMismatch(std::string(which) + " label " + std::to_string(label) + " >= K");
    }
  }
}

}  // namespace

Matrix to_matrix(const EncodedDataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) return to_matrix(ds, 0, ds.n);
  Matrix m(rows.size(), ds.d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = ds.row(rows[i]);
    std::copy(src.begin(), src.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * ds.d));
  }
  return m;
}

Matrix to_matrix(const EncodedDataset& ds, std::size_t first, std::size_t count) {
  Matrix m(count, ds.d);
  std::copy_n(ds.x.data() + first * ds.d, count * ds.d, m.data.data());
  return m;
}

MlpModel init_model(std::vector<std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw BadDims("need at least input and output dimensions");
  for (auto d : dims) {
    if (d < 1) throw BadDims("every dimension must be >= 1");
  }
  MlpModel model;
  model.dims = std::move(dims);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < model.dims.size(); ++l) {
    DenseLayer layer;
    layer.fan_in = model.dims[l];
    layer.fan_out = model.dims[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
    layer.weights.resize(layer.fan_in * layer.fan_out);
    for (double& w : layer.weights) w = rng.uniform(-a, a);
    layer.bias.assign(layer.fan_out, 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::size_t count_parameters(std::span<const std::size_t> dims) {
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) total += (dims[i] + 1) * dims[i + 1];
  return total;
}

std::size_t count_parameters(const MlpModel& model) { return count_parameters(model.dims); }

Matrix forward(const MlpModel& model, const Matrix& x, kernels::Backend backend) {
  return std::move(forward_all(model, x, backend).back());
}

double loss(const Matrix& probs, std::span<const std::uint16_t> y, const ClassWeights* weights) {
  check_labels(y, probs.rows, probs.cols);
  check_weights(weights, probs.cols);
  double weight_sum = 0.0;
  const double total = weighted_nll_sum(probs, y, weights, weight_sum);
  return weight_sum > 0.0 ? total / weight_sum : 0.0;
}

Gradients gradients(const MlpModel& model, const Matrix& x, std::span<const std::uint16_t> y,
                    const ClassWeights* weights, kernels::Backend backend) {
  Gradients g;
  backprop(model, x, y, weights, backend, g);
  return g;
}

std::vector<std::uint16_t> argmax_rows(const Matrix& probs) {
  std::vector<std::uint16_t> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const auto row = probs.row(r);
    out[r] = static_cast<std::uint16_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<std::uint16_t> predict(const MlpModel& model, const Matrix& x,
                                   kernels::Backend backend) {
  return argmax_rows(forward(model, x, backend));
}

std::vector<std::uint16_t> predict(const MlpModel& model, const EncodedDataset& ds,
                                   kernels::Backend backend) {
  if (ds.d != model.input_width()) {
    throw ShapeMismatch("dataset width " + std::to_string(ds.d) + " != model input width " +
                        std::to_string(model.input_width()));
  }
  std::vector<std::uint16_t> out;
  out.reserve(ds.n);
  for (std::size_t first = 0; first < ds.n; first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, ds.n - first);
    const auto part = predict(model, to_matrix(ds, first, count), backend);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be > 0");
  }
  if (optimizer == OptimizerKind::kAdam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw UsageError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be > 0");
  }
  if (class_weights) {
    for (double w : class_weights->w) {
      if (!(w > 0.0) || !std::isfinite(w)) throw UsageError("class_weights must be positive");
    }
  }
}

EpochStats evaluate_dataset(const MlpModel& model, const EncodedDataset& ds,
                            const ClassWeights* weights, kernels::Backend backend) {
  check_dataset(model, ds, "dataset");
  check_weights(weights, model.num_classes());
  double nll = 0.0;
  double weight_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t first = 0; first < ds.n; first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, ds.n - first);
    const Matrix probs = forward(model, to_matrix(ds, first, count), backend);
    const std::span<const std::uint16_t> y(ds.y.data() + first, count);
    double ws = 0.0;
    nll += weighted_nll_sum(probs, y, weights, ws);
    weight_sum += ws;
    const auto pred = argmax_rows(probs);
    for (std::size_t i = 0; i < count; ++i) correct += pred[i] == y[i] ? 1 : 0;
  }
  EpochStats s;
  s.val_loss = weight_sum > 0.0 ? nll / weight_sum : 0.0;
  s.val_accuracy = ds.n ? static_cast<double>(correct) / static_cast<double>(ds.n) : 0.0;
  return s;
}

TrainResult train(MlpModel model, const EncodedDataset& train_ds, const EncodedDataset& val_ds,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  check_dataset(model, train_ds, "training set");
  check_dataset(model, val_ds, "validation set");
  if (train_ds.n == 0) throw EmptyInput("training set is empty");
  const ClassWeights* weights = config.class_weights ? &*config.class_weights : nullptr;
  check_weights(weights, model.num_classes());

  Rng rng(config.seed);
  Optimizer optimizer(model, config);
  std::vector<std::size_t> order(train_ds.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint16_t> batch_y;
  Gradients grads;

  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      const std::span<const std::size_t> rows(order.data() + first, count);
      const Matrix x = to_matrix(train_ds, rows);
      batch_y.resize(count);
      double batch_weight = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        batch_y[i] = train_ds.y[rows[i]];
        batch_weight += class_weight(weights, batch_y[i]);
      }
      const double batch_loss = backprop(model, x, batch_y, weights, config.backend, grads);
      loss_sum += batch_loss * batch_weight;
      weight_sum += batch_weight;
      optimizer.step(model, grads);
    }

    EpochStats stats = evaluate_dataset(model, val_ds, weights, config.backend);
    stats.train_loss = loss_sum / weight_sum;
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
      throw NonFiniteLoss(epoch);
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(epoch, stats);
  }
  result.model = std::move(model);
  return result;
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,train_loss,val_loss,val_accuracy\n";
  char buf[128];
  for (std::size_t e = 0; e < history.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e + 1, history[e].train_loss,
                  history[e].val_loss, history[e].val_accuracy);
    out << buf;
  }
}

}  // namespace zdids
