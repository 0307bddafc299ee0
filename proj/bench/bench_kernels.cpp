#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "graphsim/kernels.hpp"

namespace k = graphsim::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  return v;
}

template <auto Fn>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1);
  const auto b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Fn(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}

template <auto Fn>
void BM_TemporalConv(benchmark::State& state) {
  const std::size_t T = 5, M = static_cast<std::size_t>(state.range(0)), C = 512;
  const auto x = random_values(T * M * C, 3);
  const auto kernel = random_values(C * 3, 4);
  const auto bias = random_values(C, 5);
  std::vector<double> y(x.size());
  for (auto _ : state) {
    Fn(x, kernel, bias, y, T, M, C);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_Matmul<k::serial::matmul>)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<k::omp::matmul>)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<k::serial::matmul_tn>)->Arg(128);
BENCHMARK(BM_Matmul<k::omp::matmul_tn>)->Arg(128);
BENCHMARK(BM_TemporalConv<k::serial::temporal_conv>)->Arg(1)->Arg(32);
BENCHMARK(BM_TemporalConv<k::omp::temporal_conv>)->Arg(1)->Arg(32);

BENCHMARK_MAIN();
