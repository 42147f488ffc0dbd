#pragma once

// Dense-layer kernels over row-major matrices.
//
// Every kernel exists twice: `serial` is the reference, `omp` splits the
// outer loop across threads. Each output element is owned by one thread and
// accumulated in the same order as the reference, so both produce
// bit-identical results for any thread count.

#include <cstddef>
#include <span>
#include <string_view>

namespace zdids::kernels {

enum class Backend { kSerial, kOpenMP };

std::string_view backend_name(Backend b);
int max_threads();

namespace serial {

// out[r][j] = bias[j] + sum_i in[r][i] * w[i][j]; in is rows x n, w is n x m.
void affine(std::span<const double> in, std::size_t rows, std::size_t n, std::span<const double> w,
            std::size_t m, std::span<const double> bias, std::span<double> out);
// dw[i][j] = sum_r in[r][i] * delta[r][j]; db[j] = sum_r delta[r][j].
void affine_grad_params(std::span<const double> in, std::size_t rows, std::size_t n,
                        std::span<const double> delta, std::size_t m, std::span<double> dw,
                        std::span<double> db);
// din[r][i] = sum_j delta[r][j] * w[i][j].
void affine_grad_input(std::span<const double> delta, std::size_t rows, std::size_t m,
                       std::span<const double> w, std::size_t n, std::span<double> din);
void relu(std::span<double> v);
// Zeroes grad wherever the activated value is not positive.
void relu_backward(std::span<const double> activated, std::span<double> grad);
// Row-wise softmax with max subtraction.
void softmax_rows(std::span<double> logits, std::size_t rows, std::size_t k);

}  // namespace serial

namespace omp {

void affine(std::span<const double> in, std::size_t rows, std::size_t n, std::span<const double> w,
            std::size_t m, std::span<const double> bias, std::span<double> out);
void affine_grad_params(std::span<const double> in, std::size_t rows, std::size_t n,
                        std::span<const double> delta, std::size_t m, std::span<double> dw,
                        std::span<double> db);
void affine_grad_input(std::span<const double> delta, std::size_t rows, std::size_t m,
                       std::span<const double> w, std::size_t n, std::span<double> din);
void relu(std::span<double> v);
void relu_backward(std::span<const double> activated, std::span<double> grad);
void softmax_rows(std::span<double> logits, std::size_t rows, std::size_t k);

}  // namespace omp

// Runtime dispatch used by the network code.
void affine(Backend b, std::span<const double> in, std::size_t rows, std::size_t n,
            std::span<const double> w, std::size_t m, std::span<const double> bias,
            std::span<double> out);
void affine_grad_params(Backend b, std::span<const double> in, std::size_t rows, std::size_t n,
                        std::span<const double> delta, std::size_t m, std::span<double> dw,
                        std::span<double> db);
void affine_grad_input(Backend b, std::span<const double> delta, std::size_t rows, std::size_t m,
                       std::span<const double> w, std::size_t n, std::span<double> din);
void relu(Backend b, std::span<double> v);
void relu_backward(Backend b, std::span<const double> activated, std::span<double> grad);
void softmax_rows(Backend b, std::span<double> logits, std::size_t rows, std::size_t k);

}  // namespace zdids::kernels
