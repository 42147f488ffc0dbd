#define EIGEN_DONT_PARALLELIZE
#include "zdids/shap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "zdids/error.hpp"
#include "zdids/metrics.hpp"
#include "zdids/random.hpp"

namespace zdids::shap {

namespace {

// Background rows evaluated per model call while scanning coalitions.
constexpr std::size_t kEvalRowsPerCall = 4096;
constexpr double kRidge = 1e-10;

double binomial(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return c;
}

void check_background(const Background& background, std::size_t width) {
  if (background.rows.rows < 1) throw OutOfRange("background needs at least one row");
  if (background.rows.cols != width) {
    throw ShapeMismatch("background width " + std::to_string(background.rows.cols) +
                        " != input width " + std::to_string(width));
  }
}

Matrix call_checked(const ModelFn& fn, const Matrix& in) {
  Matrix out = fn(in);
  if (out.rows != in.rows) throw ShapeMismatch("model function changed the row count");
  return out;
}

// Mean model output per coalition for one explained row: |C| x K.
Matrix coalition_values(const ModelFn& fn, std::span<const double> x,
                        const Background& background, const std::vector<Coalition>& coalitions,
                        std::size_t k) {
  const std::size_t b = background.rows.rows;
  const std::size_t m = background.rows.cols;
  const std::size_t per_call = std::max<std::size_t>(1, kEvalRowsPerCall / b);
  Matrix values(coalitions.size(), k);
  Matrix batch;
  for (std::size_t first = 0; first < coalitions.size(); first += per_call) {
    const std::size_t count = std::min(per_call, coalitions.size() - first);
    batch = Matrix(count * b, m);
    for (std::size_t c = 0; c < count; ++c) {
      const auto& mask = coalitions[first + c].mask;
      for (std::size_t r = 0; r < b; ++r) {
        auto dst = batch.row(c * b + r);
        const auto src = background.rows.row(r);
        for (std::size_t j = 0; j < m; ++j) dst[j] = mask[j] ? x[j] : src[j];
      }
    }
    const Matrix out = call_checked(fn, batch);
    if (out.cols != k) throw ShapeMismatch("model function changed the output width");
    for (std::size_t c = 0; c < count; ++c) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        double sum = 0.0;
        for (std::size_t r = 0; r < b; ++r) sum += out(c * b + r, kk);
        values(first + c, kk) = sum / static_cast<double>(b);
      }
    }
  }
  return values;
}

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> mean(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) mean[c] += m(r, c);
  }
  for (auto& v : mean) v /= static_cast<double>(m.rows);
  return mean;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ModelFn model_fn(const MlpModel& model) {
  return [&model](const Matrix& x) { return forward(model, x, kernels::Backend::kSerial); };
}

std::size_t Coalition::size() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

double kernel_weight(std::size_t num_features, std::size_t coalition_size) {
  if (num_features < 2 || coalition_size < 1 || coalition_size >= num_features) {
    throw OutOfRange("kernel weight needs M >= 2 and 1 <= s <= M-1 (M=" +
                     std::to_string(num_features) + ", s=" + std::to_string(coalition_size) + ")");
  }
  const double m = static_cast<double>(num_features);
  const double s = static_cast<double>(coalition_size);
  return (m - 1.0) / (binomial(num_features, coalition_size) * s * (m - s));
}

std::size_t default_budget(std::size_t num_features) {
  return 2 * num_features + kDefaultBudgetBase;
}

bool is_full_enumeration(std::size_t num_features, std::size_t budget) {
  return num_features < 63 && (std::uint64_t{1} << num_features) - 2 <= budget;
}

std::vector<Coalition> enumerate_or_sample_coalitions(std::size_t num_features,
                                                      std::size_t budget, std::uint64_t seed) {
  if (budget < 2) throw BadBudget("coalition budget must be >= 2");
  if (num_features < 2) throw OutOfRange("need at least two features");
  const std::size_t m = num_features;
  std::vector<Coalition> out;

  if (is_full_enumeration(m, budget)) {
    const std::uint64_t full = (std::uint64_t{1} << m) - 1;
    out.reserve(full - 1);
    for (std::uint64_t bits = 1; bits < full; ++bits) {
      Coalition c;
      c.mask.resize(m);
      for (std::size_t j = 0; j < m; ++j) c.mask[j] = (bits >> j) & 1u;
      c.weight = kernel_weight(m, static_cast<std::size_t>(std::popcount(bits)));
      out.push_back(std::move(c));
    }
    return out;
  }

  // Aggregate kernel mass of size s is C(M,s) * w(M,s) = (M-1) / (s (M-s)).
  std::vector<double> cdf(m - 1);
  double mass = 0.0;
  for (std::size_t s = 1; s < m; ++s) {
    mass += static_cast<double>(m - 1) / static_cast<double>(s * (m - s));
    cdf[s - 1] = mass;
  }
  const std::size_t pairs = budget / 2;
  const double weight = mass / static_cast<double>(2 * pairs);
  Rng rng(seed);
  out.reserve(2 * pairs);
  for (std::size_t p = 0; p < pairs; ++p) {
    const double u = rng.uniform01() * mass;
    const std::size_t s =
        std::min<std::size_t>(m - 1, 1 + static_cast<std::size_t>(
                                             std::upper_bound(cdf.begin(), cdf.end(), u) -
                                             cdf.begin()));
    Coalition c;
    c.mask.assign(m, 0);
    for (std::size_t j : rng.sample(m, s)) c.mask[j] = 1;
    c.weight = weight;
    Coalition complement;
    complement.mask.resize(m);
    for (std::size_t j = 0; j < m; ++j) complement.mask[j] = c.mask[j] ? 0 : 1;
    complement.weight = weight;
    out.push_back(std::move(c));
    out.push_back(std::move(complement));
  }
  return out;
}

std::vector<double> masked_eval(const ModelFn& fn, std::span<const double> x,
                                const Background& background, std::span<const std::uint8_t> mask) {
  check_background(background, x.size());
  if (mask.size() != x.size()) throw ShapeMismatch("mask width differs from input width");
  const std::size_t b = background.rows.rows;
  Matrix batch = background.rows;
  for (std::size_t r = 0; r < b; ++r) {
    auto row = batch.row(r);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (mask[j]) row[j] = x[j];
    }
  }
  return column_means(call_checked(fn, batch));
}

double Explanation::efficiency_residual(std::size_t cls) const {
  double worst = 0.0;
  const Matrix& p = phi.at(cls);
  for (std::size_t i = 0; i < p.rows; ++i) {
    double sum = base_values[cls];
    for (double v : p.row(i)) sum += v;
    worst = std::max(worst, std::abs(sum - outputs(i, cls)));
  }
  return worst;
}

Explanation kernel_shap(const ModelFn& fn, const Matrix& x_rows, const Background& background,
                        std::size_t budget, std::uint64_t seed) {
  const std::size_t m = x_rows.cols;
  if (m < 2) throw OutOfRange("kernel_shap needs at least two features");
  check_background(background, m);
  const auto coalitions = enumerate_or_sample_coalitions(m, budget, seed);
  const std::size_t nc = coalitions.size();
  const std::size_t n = x_rows.rows;

  Explanation expl;
  expl.base_values = column_means(call_checked(fn, background.rows));
  const std::size_t k = expl.base_values.size();
  expl.outputs = n ? call_checked(fn, x_rows) : Matrix(0, k);

  std::vector<Matrix> values(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    values[i] = coalition_values(fn, x_rows.row(static_cast<std::size_t>(i)), background,
                                 coalitions, k);
  }

  // phi_last = delta - sum(others) turns the constrained fit into an
  // unconstrained one over M-1 columns (z_j - z_last).
  Eigen::MatrixXd design(nc, m - 1);
  Eigen::VectorXd sqrt_w(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    sqrt_w[c] = std::sqrt(coalitions[c].weight);
    const auto& mask = coalitions[c].mask;
    for (std::size_t j = 0; j + 1 < m; ++j) {
      design(c, j) = sqrt_w[c] * (static_cast<double>(mask[j]) - static_cast<double>(mask[m - 1]));
    }
  }
  Eigen::MatrixXd rhs(nc, n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double delta = expl.outputs(i, kk) - expl.base_values[kk];
      for (std::size_t c = 0; c < nc; ++c) {
        const double target = values[i](c, kk) - expl.base_values[kk] -
                              static_cast<double>(coalitions[c].mask[m - 1]) * delta;
        rhs(c, i * k + kk) = sqrt_w[c] * target;
      }
    }
  }

  Eigen::MatrixXd beta;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (static_cast<std::size_t>(qr.rank()) == m - 1) {
    beta = qr.solve(rhs);
  } else {
    Eigen::MatrixXd normal = design.transpose() * design;
    normal.diagonal().array() += kRidge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success) throw SingularSystem(0);
    beta = ldlt.solve(design.transpose() * rhs);
  }
  for (Eigen::Index col = 0; col < beta.cols(); ++col) {
    if (!beta.col(col).allFinite()) throw SingularSystem(static_cast<std::size_t>(col) % k);
  }

  expl.phi.assign(k, Matrix(n, m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double delta = expl.outputs(i, kk) - expl.base_values[kk];
      double rest = 0.0;
      for (std::size_t j = 0; j + 1 < m; ++j) {
        const double v = beta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i * k + kk));
        expl.phi[kk](i, j) = v;
        rest += v;
      }
      expl.phi[kk](i, m - 1) = delta - rest;
    }
  }
  return expl;
}

Matrix exact_shapley(const ModelFn& fn, std::span<const double> x, const Background& background) {
  const std::size_t m = x.size();
  if (m > kMaxExactFeatures) {
    throw TooManyFeatures("exact Shapley enumeration is limited to " +
                          std::to_string(kMaxExactFeatures) + " features");
  }
  if (m < 1) throw OutOfRange("need at least one feature");
  check_background(background, m);

  const std::uint64_t subsets = std::uint64_t{1} << m;
  std::vector<std::vector<double>> v(subsets);
  std::vector<std::uint8_t> mask(m);
  for (std::uint64_t bits = 0; bits < subsets; ++bits) {
    for (std::size_t j = 0; j < m; ++j) mask[j] = (bits >> j) & 1u;
    v[bits] = masked_eval(fn, x, background, mask);
  }
  const std::size_t k = v[0].size();

  // |S|! (M-|S|-1)! / M!
  std::vector<double> factorial(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
  std::vector<double> coeff(m);
  for (std::size_t s = 0; s < m; ++s) coeff[s] = factorial[s] * factorial[m - s - 1] / factorial[m];

  Matrix phi(k, m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::uint64_t bit = std::uint64_t{1} << j;
    for (std::uint64_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const double w = coeff[static_cast<std::size_t>(std::popcount(s))];
      for (std::size_t kk = 0; kk < k; ++kk) phi(kk, j) += w * (v[s | bit][kk] - v[s][kk]);
    }
  }
  return phi;
}

std::vector<std::vector<RankedFeature>> top_features(const Explanation& expl, std::size_t k) {
  if (k < 1) throw OutOfRange("top_features needs k >= 1");
  std::vector<std::vector<RankedFeature>> out;
  const std::size_t m = expl.num_features();
  for (const Matrix& p : expl.phi) {
    std::vector<RankedFeature> ranked(m);
    for (std::size_t j = 0; j < m; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < p.rows; ++i) sum += std::abs(p(i, j));
      ranked[j].feature = j;
      ranked[j].name = j < expl.feature_names.size() ? expl.feature_names[j] : std::to_string(j);
      ranked[j].mean_abs = p.rows ? sum / static_cast<double>(p.rows) : 0.0;
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.mean_abs > b.mean_abs;
    });
    ranked.resize(std::min(k, m));
    out.push_back(std::move(ranked));
  }
  return out;
}

void write_class_csv(std::ostream& out, const Explanation& expl, std::size_t cls) {
  const Matrix& p = expl.phi.at(cls);
  out << "base_value," << fmt17(expl.base_values.at(cls)) << '\n';
  for (std::size_t j = 0; j < p.cols; ++j) {
    if (j) out << ',';
    out << csv_field(j < expl.feature_names.size() ? expl.feature_names[j] : std::to_string(j));
  }
  out << '\n';
  for (std::size_t i = 0; i < p.rows; ++i) {
    for (std::size_t j = 0; j < p.cols; ++j) {
      if (j) out << ',';
      out << fmt17(p(i, j));
    }
    out << '\n';
  }
}

void write_top_features_csv(std::ostream& out, const Explanation& expl,
                            const std::vector<std::vector<RankedFeature>>& ranked) {
  out << "class,rank,feature,mean_abs_shap\n";
  for (std::size_t c = 0; c < ranked.size(); ++c) {
    const std::string cls = c < expl.class_names.size() ? expl.class_names[c] : std::to_string(c);
    for (std::size_t r = 0; r < ranked[c].size(); ++r) {
      out << csv_field(cls) << ',' << r + 1 << ',' << csv_field(ranked[c][r].name) << ','
          << fmt17(ranked[c][r].mean_abs) << '\n';
    }
  }
}

}  // namespace zdids::shap
