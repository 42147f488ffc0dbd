#include "kernel_bodies.hpp"
#include "kernel_checks.hpp"
#include "zdids/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace zdids::kernels {

std::string_view backend_name(Backend b) { return b == Backend::kSerial ? "serial" : "openmp"; }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

using detail::require_size;

void affine(std::span<const double> in, std::size_t rows, std::size_t n, std::span<const double> w,
            std::size_t m, std::span<const double> bias, std::span<double> out) {
  require_size(in.size(), rows * n, "affine input");
  require_size(w.size(), n * m, "affine weights");
  require_size(bias.size(), m, "affine bias");
  require_size(out.size(), rows * m, "affine output");
  detail::affine_rows(in.data(), 0, rows, n, w.data(), m, bias.data(), out.data());
}

void affine_grad_params(std::span<const double> in, std::size_t rows, std::size_t n,
                        std::span<const double> delta, std::size_t m, std::span<double> dw,
                        std::span<double> db) {
  require_size(in.size(), rows * n, "grad input activations");
  require_size(delta.size(), rows * m, "grad delta");
  require_size(dw.size(), n * m, "grad weights");
  require_size(db.size(), m, "grad bias");
  detail::grad_weight_rows(in.data(), rows, n, delta.data(), m, dw.data(), 0, n);
  detail::grad_bias(delta.data(), rows, m, db.data());
}

void affine_grad_input(std::span<const double> delta, std::size_t rows, std::size_t m,
                       std::span<const double> w, std::size_t n, std::span<double> din) {
  require_size(delta.size(), rows * m, "grad delta");
  require_size(w.size(), n * m, "grad weights");
  require_size(din.size(), rows * n, "grad input");
  detail::grad_input_rows(delta.data(), 0, rows, m, w.data(), n, din.data());
}

void relu(std::span<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void relu_backward(std::span<const double> activated, std::span<double> grad) {
  require_size(activated.size(), grad.size(), "relu activations");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
  }
}

void softmax_rows(std::span<double> logits, std::size_t rows, std::size_t k) {
  require_size(logits.size(), rows * k, "softmax logits");
  for (std::size_t r = 0; r < rows; ++r) detail::softmax_row(logits.data() + r * k, k);
}

}  // namespace serial

#define ZDIDS_DISPATCH(fn, ...) \
  (b == Backend::kSerial ? serial::fn(__VA_ARGS__) : omp::fn(__VA_ARGS__))

void affine(Backend b, std::span<const double> in, std::size_t rows, std::size_t n,
            std::span<const double> w, std::size_t m, std::span<const double> bias,
            std::span<double> out) {
  ZDIDS_DISPATCH(affine, in, rows, n, w, m, bias, out);
}

void affine_grad_params(Backend b, std::span<const double> in, std::size_t rows, std::size_t n,
                        std::span<const double> delta, std::size_t m, std::span<double> dw,
                        std::span<double> db) {
  ZDIDS_DISPATCH(affine_grad_params, in, rows, n, delta, m, dw, db);
}

void affine_grad_input(Backend b, std::span<const double> delta, std::size_t rows, std::size_t m,
                       std::span<const double> w, std::size_t n, std::span<double> din) {
  ZDIDS_DISPATCH(affine_grad_input, delta, rows, m, w, n, din);
}

void relu(Backend b, std::span<double> v) { ZDIDS_DISPATCH(relu, v); }

void relu_backward(Backend b, std::span<const double> activated, std::span<double> grad) {
  ZDIDS_DISPATCH(relu_backward, activated, grad);
}

void softmax_rows(Backend b, std::span<double> logits, std::size_t rows, std::size_t k) {
  ZDIDS_DISPATCH(softmax_rows, logits, rows, k);
}

#undef ZDIDS_DISPATCH

}  // namespace zdids::kernels
