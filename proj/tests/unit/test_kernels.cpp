#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "zdids/error.hpp"
#include "zdids/kernels.hpp"
#include "zdids/random.hpp"

namespace zdids::kernels {
namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double zero_share = 0.2) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform01() < zero_share ? 0.0 : rng.uniform(-2.0, 2.0);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Shape {
  std::size_t rows, n, m;
};

class KernelParity : public ::testing::TestWithParam<int> {};

// The parallel kernels must reproduce the serial ones bit for bit, for any
// thread count and shapes that do not divide the block sizes.
TEST_P(KernelParity, BitIdenticalToSerial) {
  omp_set_num_threads(GetParam());
  Rng rng(1234 + GetParam());
  const Shape shapes[] = {{1, 1, 1}, {3, 7, 5}, {17, 33, 9}, {64, 122, 112}, {129, 20, 23},
                          {1000, 16, 4}};
  for (const auto& s : shapes) {
    const auto in = random_vector(rng, s.rows * s.n);
    const auto w = random_vector(rng, s.n * s.m, 0.0);
    const auto b = random_vector(rng, s.m, 0.0);
    const auto delta = random_vector(rng, s.rows * s.m);

    std::vector<double> o1(s.rows * s.m), o2(s.rows * s.m);
    serial::affine(in, s.rows, s.n, w, s.m, b, o1);
    omp::affine(in, s.rows, s.n, w, s.m, b, o2);
    EXPECT_TRUE(bit_equal(o1, o2)) << "affine " << s.rows << "x" << s.n << "x" << s.m;

    std::vector<double> dw1(s.n * s.m), db1(s.m), dw2(s.n * s.m), db2(s.m);
    serial::affine_grad_params(in, s.rows, s.n, delta, s.m, dw1, db1);
    omp::affine_grad_params(in, s.rows, s.n, delta, s.m, dw2, db2);
    EXPECT_TRUE(bit_equal(dw1, dw2)) << "dw";
    EXPECT_TRUE(bit_equal(db1, db2)) << "db";

    std::vector<double> di1(s.rows * s.n), di2(s.rows * s.n);
    serial::affine_grad_input(delta, s.rows, s.m, w, s.n, di1);
    omp::affine_grad_input(delta, s.rows, s.m, w, s.n, di2);
    EXPECT_TRUE(bit_equal(di1, di2)) << "din";

    auto r1 = o1, r2 = o1;
    serial::relu(r1);
    omp::relu(r2);
    EXPECT_TRUE(bit_equal(r1, r2));

    auto g1 = delta, g2 = delta;
    serial::relu_backward(r1, g1);
    omp::relu_backward(r1, g2);
    EXPECT_TRUE(bit_equal(g1, g2));

    auto s1 = o1, s2 = o1;
    serial::softmax_rows(s1, s.rows, s.m);
    omp::softmax_rows(s2, s.rows, s.m);
    EXPECT_TRUE(bit_equal(s1, s2));
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelParity, ::testing::Values(1, 2, 3, 4, 7));

// Serial kernels against plain triple loops.
TEST(SerialKernels, MatchNaiveLoops) {
  Rng rng(5);
  const std::size_t rows = 11, n = 13, m = 6;
  const auto in = random_vector(rng, rows * n);
  const auto w = random_vector(rng, n * m, 0.0);
  const auto b = random_vector(rng, m, 0.0);
  const auto delta = random_vector(rng, rows * m, 0.0);

  std::vector<double> out(rows * m), dw(n * m), db(m), din(rows * n);
  serial::affine(in, rows, n, w, m, b, out);
  serial::affine_grad_params(in, rows, n, delta, m, dw, db);
  serial::affine_grad_input(delta, rows, m, w, n, din);

  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = b[j];
      for (std::size_t i = 0; i < n; ++i) acc += in[r * n + i] * w[i * m + j];
      EXPECT_NEAR(out[r * m + j], acc, 1e-12);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) acc += in[r * n + i] * delta[r * m + j];
      EXPECT_NEAR(dw[i * m + j], acc, 1e-12);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += delta[r * m + j];
    EXPECT_NEAR(db[j], acc, 1e-12);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += delta[r * m + j] * w[i * m + j];
      EXPECT_NEAR(din[r * n + i], acc, 1e-12);
    }
  }
}

TEST(SerialKernels, SoftmaxRowsSumToOneAndSurviveLargeLogits) {
  std::vector<double> logits = {1000.0, 1001.0, 1002.0, 0.0, 0.0, 0.0};
  serial::softmax_rows(logits, 2, 3);
  EXPECT_NEAR(logits[0] + logits[1] + logits[2], 1.0, 1e-15);
  EXPECT_GT(logits[2], logits[1]);
  for (std::size_t j = 3; j < 6; ++j) EXPECT_NEAR(logits[j], 1.0 / 3.0, 1e-15);
}

TEST(SerialKernels, ShapeChecks) {
  std::vector<double> in(6), w(6), b(2), out(3);
  EXPECT_THROW(serial::affine(in, 2, 3, w, 2, b, out), ShapeMismatch);
  EXPECT_THROW(omp::affine(in, 2, 3, w, 2, b, out), ShapeMismatch);
}

}  // namespace
}  // namespace zdids::kernels
