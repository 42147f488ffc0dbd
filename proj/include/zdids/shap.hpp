#pragma once

// Model-agnostic KernelSHAP. Coalition values are marginal expectations over
// a background set; attributions come from a Shapley-kernel weighted least
// squares fit with the efficiency constraint eliminated by substitution.
// exact_shapley() enumerates all coalitions and serves as the oracle.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zdids/mlp.hpp"

namespace zdids::shap {

// Maps a batch (rows x M) to class outputs (rows x K). Must be safe to call
// concurrently.
using ModelFn = std::function<Matrix(const Matrix&)>;

// Wraps a trained network; forward passes run on the serial kernels because
// explained rows are already distributed across threads.
ModelFn model_fn(const MlpModel& model);

struct Background {
  Matrix rows;  // B x M
};

struct Coalition {
  std::vector<std::uint8_t> mask;  // 1 = feature taken from the explained row
  double weight = 0.0;
  std::size_t size() const;
};

// Shapley kernel (M-1) / (C(M,s) s (M-s)) for 1 <= s <= M-1.
double kernel_weight(std::size_t num_features, std::size_t coalition_size);

inline constexpr std::size_t kDefaultBudgetBase = 2048;
// 2 M + 2048.
std::size_t default_budget(std::size_t num_features);

// All proper non-empty coalitions with exact kernel weights when
// 2^M - 2 <= budget; otherwise budget/2 seeded draws (size proportional to
// aggregate kernel mass, uniform subset of that size), each paired with its
// complement, all with equal weight.
std::vector<Coalition> enumerate_or_sample_coalitions(std::size_t num_features,
                                                      std::size_t budget, std::uint64_t seed);
bool is_full_enumeration(std::size_t num_features, std::size_t budget);

// Mean of f over background rows with the masked-on positions replaced by x.
std::vector<double> masked_eval(const ModelFn& fn, std::span<const double> x,
                                const Background& background, std::span<const std::uint8_t> mask);

struct Explanation {
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::vector<Matrix> phi;          // per class: rows x M
  std::vector<double> base_values;  // per class: E_background[f]
  Matrix outputs;                   // rows x K: f(x) for each explained row

  std::size_t num_rows() const { return outputs.rows; }
  std::size_t num_features() const { return phi.empty() ? 0 : phi.front().cols; }
  // max |sum_j phi + base - f(x)| over rows for one class.
  double efficiency_residual(std::size_t cls) const;
};

Explanation kernel_shap(const ModelFn& fn, const Matrix& x_rows, const Background& background,
                        std::size_t budget, std::uint64_t seed);

inline constexpr std::size_t kMaxExactFeatures = 15;

// K x M matrix of exact Shapley values.
Matrix exact_shapley(const ModelFn& fn, std::span<const double> x, const Background& background);

struct RankedFeature {
  std::size_t feature = 0;
  std::string name;
  double mean_abs = 0.0;
  bool operator==(const RankedFeature&) const = default;
};

// Per class, features by mean |phi| descending, ties by feature index.
std::vector<std::vector<RankedFeature>> top_features(const Explanation& expl, std::size_t k);

// Line 1: `base_value,<v>`; line 2: feature names; then one row per
// explained instance.
void write_class_csv(std::ostream& out, const Explanation& expl, std::size_t cls);
// `class,rank,feature,mean_abs_shap`.
void write_top_features_csv(std::ostream& out, const Explanation& expl,
                            const std::vector<std::vector<RankedFeature>>& ranked);

}  // namespace zdids::shap
