#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "qnewton/kernels.hpp"
#include "qnewton/model.hpp"
#include "qnewton/training.hpp"

using namespace qnewton;

namespace {

std::vector<double> spd_matrix(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> b(n * n), a(n * n, 0.0);
  for (double& v : b) v = u(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] += b[i * n + k] * b[j * n + k];
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] += static_cast<double>(n);
  return a;
}

template <auto Lu>
void BM_LuFactor(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = spd_matrix(n);
  std::vector<std::size_t> piv(n);
  for (auto _ : state) {
    state.PauseTiming();
    auto work = a;
    state.ResumeTiming();
    benchmark::DoNotOptimize(Lu(work, n, piv, 1e-12));
  }
  state.SetComplexityN(state.range(0));
}

template <auto Chol>
void BM_Cholesky(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = spd_matrix(n);
  for (auto _ : state) {
    state.PauseTiming();
    auto work = a;
    state.ResumeTiming();
    benchmark::DoNotOptimize(Chol(work, n));
  }
  state.SetComplexityN(state.range(0));
}

template <Execution Exec>
void BM_HessianAssembly(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  const MlpModel model({64, hidden, 10}, 1);
  const auto batch = oracle::random_batch(32, 64, 10, rng);
  const double h = fd_step_for_layer(model, 1, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_layer_hessian(model, batch, 1, h, Exec));
  state.counters["n"] = static_cast<double>(model.parameter_count(1));
}

}  // namespace

BENCHMARK(BM_LuFactor<kernels::serial::lu_factor>)->Name("lu_factor/serial")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_LuFactor<kernels::omp::lu_factor>)->Name("lu_factor/omp")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_Cholesky<kernels::serial::cholesky>)->Name("cholesky/serial")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_Cholesky<kernels::omp::cholesky>)->Name("cholesky/omp")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_HessianAssembly<Execution::Serial>)->Name("hessian_assembly/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_HessianAssembly<Execution::Parallel>)->Name("hessian_assembly/omp")->Arg(16)->Arg(32);

BENCHMARK_MAIN();
