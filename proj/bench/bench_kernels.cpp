// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP counterparts.
//
//   OMP_NUM_THREADS=4 ./build/bench/bench_kernels
#include <benchmark/benchmark.h>

#include <vector>

#include "yieldgan/kernels.hpp"
#include "yieldgan/rng.hpp"

namespace k = ygan::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  ygan::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const k::GemmShape s{n, n, n};
  auto a = random_vector(n * n, 1);
  auto b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::gemm(k::Trans::No, k::Trans::No, s, a, b, c, false);
    } else {
      k::serial::gemm(k::Trans::No, k::Trans::No, s, a, b, c, false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_RowAutocorr(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t len = 125, lags = 100;
  auto x = random_vector(rows * len, 3);
  std::vector<double> out(rows * (lags + 1));
  std::vector<unsigned char> degenerate(rows);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::row_autocorr(x, rows, len, lags, out, degenerate);
    } else {
      k::serial::row_autocorr(x, rows, len, lags, out, degenerate);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_PairwiseDistance(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 250;
  auto x = random_vector(rows * dim, 4);
  for (auto _ : state) {
    double d = Parallel ? k::omp::mean_pairwise_distance(x, rows, dim)
                        : k::serial::mean_pairwise_distance(x, rows, dim);
    benchmark::DoNotOptimize(d);
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_RowAutocorr<false>)->Arg(1000)->Arg(4000);
BENCHMARK(BM_RowAutocorr<true>)->Arg(1000)->Arg(4000);
BENCHMARK(BM_PairwiseDistance<false>)->Arg(500)->Arg(1000);
BENCHMARK(BM_PairwiseDistance<true>)->Arg(500)->Arg(1000);

BENCHMARK_MAIN();
