#pragma once

// Loop bodies shared by the serial and OpenMP kernels. Each function covers a
// half-open range of the outer index; the variants differ only in how they
// hand out ranges.

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace zdids::kernels::detail {

// Column block handled by one task in affine_grad_params.
inline constexpr std::size_t kGradColumnBlock = 8;

inline void affine_rows(const double* in, std::size_t r0, std::size_t r1, std::size_t n,
                        const double* w, std::size_t m, const double* bias, double* out) {
  for (std::size_t r = r0; r < r1; ++r) {
    double* o = out + r * m;
    std::copy(bias, bias + m, o);
    const double* x = in + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = x[i];
      if (a == 0.0) continue;  // one-hot columns and dead units
      const double* wi = w + i * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += a * wi[j];
    }
  }
}

// dw rows [i0, i1); the sum over r runs in ascending order for every element.
inline void grad_weight_rows(const double* in, std::size_t rows, std::size_t n,
                             const double* delta, std::size_t m, double* dw, std::size_t i0,
                             std::size_t i1) {
  std::fill(dw + i0 * m, dw + i1 * m, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * n;
    const double* d = delta + r * m;
    for (std::size_t i = i0; i < i1; ++i) {
      const double a = x[i];
      if (a == 0.0) continue;
      double* g = dw + i * m;
      for (std::size_t j = 0; j < m; ++j) g[j] += a * d[j];
    }
  }
}

inline void grad_bias(const double* delta, std::size_t rows, std::size_t m, double* db) {
  std::fill(db, db + m, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* d = delta + r * m;
    for (std::size_t j = 0; j < m; ++j) db[j] += d[j];
  }
}

inline void grad_input_rows(const double* delta, std::size_t r0, std::size_t r1, std::size_t m,
                            const double* w, std::size_t n, double* din) {
  for (std::size_t r = r0; r < r1; ++r) {
    const double* d = delta + r * m;
    double* o = din + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double* wi = w + i * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += d[j] * wi[j];
      o[i] = acc;
    }
  }
}

inline void softmax_row(double* z, std::size_t k) {
  const double mx = *std::max_element(z, z + k);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    z[j] = std::exp(z[j] - mx);
    sum += z[j];
  }
  for (std::size_t j = 0; j < k; ++j) z[j] /= sum;
}

}  // namespace zdids::kernels::detail
