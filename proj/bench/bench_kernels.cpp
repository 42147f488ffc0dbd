// Serial vs OpenMP kernels at the truncated model's first-layer shape, plus a
// forward pass and a small KernelSHAP run.

#include <benchmark/benchmark.h>

#include <vector>

#include "zdids/kernels.hpp"
#include "zdids/mlp.hpp"
#include "zdids/random.hpp"
#include "zdids/shap.hpp"

namespace {

using zdids::kernels::Backend;

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  zdids::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform01() - 0.5;
  return v;
}

constexpr std::size_t kIn = 119;
constexpr std::size_t kOut = 112;

Backend backend_arg(const benchmark::State& state) {
  return state.range(1) == 0 ? Backend::kSerial : Backend::kOpenMP;
}

void BM_Affine(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto in = filled(rows * kIn, 1), w = filled(kIn * kOut, 2), b = filled(kOut, 3);
  std::vector<double> out(rows * kOut);
  for (auto _ : state) {
    zdids::kernels::affine(backend_arg(state), in, rows, kIn, w, kOut, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BM_AffineGradParams(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto in = filled(rows * kIn, 1), delta = filled(rows * kOut, 2);
  std::vector<double> dw(kIn * kOut), db(kOut);
  for (auto _ : state) {
    zdids::kernels::affine_grad_params(backend_arg(state), in, rows, kIn, delta, kOut, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BM_AffineGradInput(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto delta = filled(rows * kOut, 1), w = filled(kIn * kOut, 2);
  std::vector<double> din(rows * kIn);
  for (auto _ : state) {
    zdids::kernels::affine_grad_input(backend_arg(state), delta, rows, kOut, w, kIn, din);
    benchmark::DoNotOptimize(din.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BM_Softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto base = filled(rows * 23, 4);
  std::vector<double> logits(base.size());
  for (auto _ : state) {
    logits = base;
    zdids::kernels::softmax_rows(backend_arg(state), logits, rows, 23);
    benchmark::DoNotOptimize(logits.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BM_Forward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto model = zdids::init_model({kIn, kOut, 4}, 1);
  zdids::Matrix x(rows, kIn);
  x.data = filled(rows * kIn, 5);
  for (auto _ : state) {
    auto p = zdids::forward(model, x, backend_arg(state));
    benchmark::DoNotOptimize(p.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void BM_KernelShap(benchmark::State& state) {
  const auto model = zdids::init_model({kIn, kOut, 4}, 1);
  const auto fn = zdids::shap::model_fn(model);
  zdids::Matrix bg(10, kIn), x(2, kIn);
  bg.data = filled(bg.data.size(), 6);
  x.data = filled(x.data.size(), 7);
  for (auto _ : state) {
    auto e = zdids::shap::kernel_shap(fn, x, zdids::shap::Background{bg},
                                      zdids::shap::default_budget(kIn), 1);
    benchmark::DoNotOptimize(e.phi.data());
  }
}

void backends(benchmark::internal::Benchmark* b) {
  for (std::int64_t rows : {64, 1024, 8192}) {
    for (std::int64_t be : {0, 1}) b->Args({rows, be});
  }
  b->ArgNames({"rows", "omp"});
}

BENCHMARK(BM_Affine)->Apply(backends);
BENCHMARK(BM_AffineGradParams)->Apply(backends);
BENCHMARK(BM_AffineGradInput)->Apply(backends);
BENCHMARK(BM_Softmax)->Apply(backends);
BENCHMARK(BM_Forward)->Apply(backends);
BENCHMARK(BM_KernelShap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
