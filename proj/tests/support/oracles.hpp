#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. None of them reuse the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "zdids/metrics.hpp"
#include "zdids/mlp.hpp"
#include "zdids/random.hpp"
#include "zdids/shap.hpp"

namespace zdids::testing {

// ---- gradients ---------------------------------------------------------------

inline constexpr double kRelativeErrorFloor = 1e-6;

struct GradientCheck {
  // max over parameters of |a - n| / max(|a| + |n|, kRelativeErrorFloor)
  double max_relative_error = 0.0;
  // ||a - n|| / (||a|| + ||n||) over all parameters
  double norm_relative_error = 0.0;
  std::size_t parameters = 0;
};

// Central differences of the weighted loss with respect to every parameter.
inline GradientCheck finite_difference_check(const MlpModel& model, const Matrix& x,
                                             const std::vector<std::uint16_t>& y,
                                             const ClassWeights* weights, double step = 1e-4) {
  const Gradients g = gradients(model, x, y, weights, kernels::Backend::kSerial);
  MlpModel probe = model;
  auto objective = [&] { return loss(forward(probe, x, kernels::Backend::kSerial), y, weights); };

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0, worst = 0.0;
  std::size_t count = 0;
  auto visit = [&](std::vector<double>& params, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + step;
      const double up = objective();
      params[i] = saved - step;
      const double down = objective();
      params[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double diff = std::abs(analytic[i] - numeric);
      worst = std::max(worst, diff / std::max(std::abs(analytic[i]) + std::abs(numeric),
                                              kRelativeErrorFloor));
      diff2 += diff * diff;
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
      ++count;
    }
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    visit(probe.layers[l].weights, g.layers[l].weights);
    visit(probe.layers[l].bias, g.layers[l].bias);
  }
  const double denom = std::sqrt(a2) + std::sqrt(n2);
  return {worst, denom > 0.0 ? std::sqrt(diff2) / denom : 0.0, count};
}

// ---- metrics -----------------------------------------------------------------

struct BruteScores {
  std::vector<double> precision, recall, f1;
  std::vector<std::uint64_t> support;
  double accuracy = 0.0;
};

// Counts TP, FP and FN per class straight from the label vectors.
inline BruteScores brute_force_scores(const std::vector<std::uint16_t>& y_true,
                                      const std::vector<std::uint16_t>& y_pred, std::size_t k,
                                      double zero_division = 1.0) {
  BruteScores s;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) correct += y_true[i] == y_pred[i];
  s.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == c, p = y_pred[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                                : zero_division;
    const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                               : zero_division;
    s.precision.push_back(prec);
    s.recall.push_back(rec);
    s.f1.push_back(prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0);
    s.support.push_back(tp + fn);
  }
  return s;
}

// ---- Shapley values ----------------------------------------------------------

// Shapley values by averaging marginal contributions over all M! feature
// orderings. Feasible for M <= 8.
inline Matrix permutation_shapley(const shap::ModelFn& fn, std::span<const double> x,
                                  const shap::Background& bg) {
  const std::size_t m = x.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint8_t> mask(m, 0);
  // Coalition value: background average with the coalition's features from x.
  auto value = [&] {
    Matrix batch = bg.rows;
    for (std::size_t r = 0; r < batch.rows; ++r) {
      for (std::size_t j = 0; j < m; ++j) {
        if (mask[j]) batch(r, j) = x[j];
      }
    }
    const Matrix out = fn(batch);
    std::vector<double> mean(out.cols, 0.0);
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t c = 0; c < out.cols; ++c) mean[c] += out(r, c);
    }
    for (auto& v : mean) v /= static_cast<double>(out.rows);
    return mean;
  };
  const auto empty = value();
  const std::size_t k = empty.size();
  Matrix phi(k, m);
  double perms = 0.0;
  do {
    std::fill(mask.begin(), mask.end(), 0);
    auto prev = empty;
    for (std::size_t j : order) {
      mask[j] = 1;
      const auto cur = value();
      for (std::size_t c = 0; c < k; ++c) phi(c, j) += cur[c] - prev[c];
      prev = cur;
    }
    perms += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& v : phi.data) v /= perms;
  return phi;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
  Matrix out(rows, cols);
  for (auto& v : out.data) v = rng.uniform(lo, hi);
  return out;
}

// init_model leaves biases at zero, so a row whose upstream units are all dead
// lands exactly on a ReLU kink where finite differences see half a slope.
// Gradient checks run on models with random biases instead.
inline MlpModel random_model(std::vector<std::size_t> dims, Rng& rng) {
  MlpModel m = init_model(std::move(dims), rng.index(std::size_t{1} << 30));
  for (auto& layer : m.layers) {
    for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  }
  return m;
}

}  // namespace zdids::testing
