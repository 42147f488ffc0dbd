#include "kernel_bodies.hpp"
#include "kernel_checks.hpp"
#include "zdids/kernels.hpp"

namespace zdids::kernels::omp {

using detail::require_size;

namespace {

// Rows per parallel task; small enough to balance, large enough to amortize.
constexpr std::ptrdiff_t kRowBlock = 16;

std::ptrdiff_t blocks(std::size_t count, std::ptrdiff_t block) {
  return (static_cast<std::ptrdiff_t>(count) + block - 1) / block;
}

std::size_t block_end(std::ptrdiff_t b, std::ptrdiff_t block, std::size_t count) {
  return std::min(count, static_cast<std::size_t>((b + 1) * block));
}

}  // namespace

void affine(std::span<const double> in, std::size_t rows, std::size_t n, std::span<const double> w,
            std::size_t m, std::span<const double> bias, std::span<double> out) {
  require_size(in.size(), rows * n, "affine input");
  require_size(w.size(), n * m, "affine weights");
  require_size(bias.size(), m, "affine bias");
  require_size(out.size(), rows * m, "affine output");
  const std::ptrdiff_t nb = blocks(rows, kRowBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    detail::affine_rows(in.data(), static_cast<std::size_t>(b * kRowBlock),
                        block_end(b, kRowBlock, rows), n, w.data(), m, bias.data(), out.data());
  }
}

void affine_grad_params(std::span<const double> in, std::size_t rows, std::size_t n,
                        std::span<const double> delta, std::size_t m, std::span<double> dw,
                        std::span<double> db) {
  require_size(in.size(), rows * n, "grad input activations");
  require_size(delta.size(), rows * m, "grad delta");
  require_size(dw.size(), n * m, "grad weights");
  require_size(db.size(), m, "grad bias");
  constexpr auto kBlock = static_cast<std::ptrdiff_t>(detail::kGradColumnBlock);
  const std::ptrdiff_t nb = blocks(n, kBlock);
  // block nb computes the bias gradient
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b <= nb; ++b) {
    if (b == nb) {
      detail::grad_bias(delta.data(), rows, m, db.data());
    } else {
      detail::grad_weight_rows(in.data(), rows, n, delta.data(), m, dw.data(),
                               static_cast<std::size_t>(b * kBlock), block_end(b, kBlock, n));
    }
  }
}

void affine_grad_input(std::span<const double> delta, std::size_t rows, std::size_t m,
                       std::span<const double> w, std::size_t n, std::span<double> din) {
  require_size(delta.size(), rows * m, "grad delta");
  require_size(w.size(), n * m, "grad weights");
  require_size(din.size(), rows * n, "grad input");
  const std::ptrdiff_t nb = blocks(rows, kRowBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    detail::grad_input_rows(delta.data(), static_cast<std::size_t>(b * kRowBlock),
                            block_end(b, kRowBlock, rows), m, w.data(), n, din.data());
  }
}

void relu(std::span<double> v) {
  const auto size = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < size; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

void relu_backward(std::span<const double> activated, std::span<double> grad) {
  require_size(activated.size(), grad.size(), "relu activations");
  const auto size = static_cast<std::ptrdiff_t>(grad.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < size; ++i) {
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
  }
}

void softmax_rows(std::span<double> logits, std::size_t rows, std::size_t k) {
  require_size(logits.size(), rows * k, "softmax logits");
  const auto nr = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < nr; ++r) detail::softmax_row(logits.data() + r * k, k);
}

}  // namespace zdids::kernels::omp
