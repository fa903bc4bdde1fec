// SPDX-License-Identifier: Apache-2.0
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "yieldgan/kernels.hpp"

namespace ygan::kernels {

int max_threads() { return omp_get_max_threads(); }

namespace omp {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelFlops = 1 << 14;

inline bool worth_parallel(std::size_t work) { return work >= kParallelFlops; }

}  // namespace

void gemm(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate) {
  const auto n = static_cast<std::ptrdiff_t>(s.n);
  const std::size_t m = s.m;
  const std::size_t k = s.k;
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();

  // Each output row is owned by one thread; within a row the summation over
  // p is ascending, independent of the thread count.
  if (tb == Trans::No) {
#pragma omp parallel for schedule(static) if (worth_parallel(s.n * m * k))
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double* crow = C + i * m;
      if (!accumulate) std::fill(crow, crow + m, 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::No ? A[i * k + p] : A[p * s.n + i];
        const double* brow = B + p * m;
#pragma omp simd
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
#pragma omp parallel for schedule(static) if (worth_parallel(s.n * m * k))
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      std::vector<double> arow(k);
      for (std::size_t p = 0; p < k; ++p) {
        arow[p] = ta == Trans::No ? A[i * k + p] : A[p * s.n + i];
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double* brow = B + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        C[i * m + j] = accumulate ? C[i * m + j] + acc : acc;
      }
    }
  }
}

void tanh(std::span<const double> in, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static) if (worth_parallel(in.size() * 16))
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
}

void sigmoid(std::span<const double> in, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static) if (worth_parallel(in.size() * 16))
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
}

void row_autocorr(std::span<const double> rows, std::size_t n_rows, std::size_t length,
                  std::size_t max_lag, std::span<double> out,
                  std::span<unsigned char> degenerate) {
  const auto nr = static_cast<std::ptrdiff_t>(n_rows);
#pragma omp parallel for schedule(static) if (worth_parallel(n_rows * length * (max_lag + 1)))
  for (std::ptrdiff_t rr = 0; rr < nr; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    const double* x = rows.data() + r * length;
    double mean = 0.0;
    for (std::size_t t = 0; t < length; ++t) mean += x[t];
    mean /= static_cast<double>(length);
    std::vector<double> centered(length);
    double var = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
      centered[t] = x[t] - mean;
      var += centered[t] * centered[t];
    }
    double* o = out.data() + r * (max_lag + 1);
    if (var == 0.0) {
      degenerate[r] = 1;
      std::fill(o, o + max_lag + 1, 0.0);
      continue;
    }
    degenerate[r] = 0;
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      double cov = 0.0;
      for (std::size_t t = 0; t + lag < length; ++t) cov += centered[t] * centered[t + lag];
      o[lag] = cov / var;
    }
  }
}

double mean_pairwise_distance(std::span<const double> rows, std::size_t n_rows,
                              std::size_t dim) {
  if (n_rows < 2) return 0.0;
  std::vector<double> partial(n_rows, 0.0);
  const auto nr = static_cast<std::ptrdiff_t>(n_rows);
  // Dynamic schedule: row i has n - i - 1 partners.
#pragma omp parallel for schedule(dynamic, 8) if (worth_parallel(n_rows * n_rows * dim / 2))
  for (std::ptrdiff_t ii = 0; ii < nr; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* xi = rows.data() + i * dim;
    double acc = 0.0;
    for (std::size_t j = i + 1; j < n_rows; ++j) {
      const double* xj = rows.data() + j * dim;
      double d2 = 0.0;
      for (std::size_t q = 0; q < dim; ++q) {
        const double d = xi[q] - xj[q];
        d2 += d * d;
      }
      acc += std::sqrt(d2);
    }
    partial[i] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  const double pairs = 0.5 * static_cast<double>(n_rows) * static_cast<double>(n_rows - 1);
  return total / pairs;
}

void gather_windows(std::span<const double> src, std::size_t width,
                    std::span<const std::size_t> starts, std::size_t window,
                    std::span<double> out) {
  const auto nw = static_cast<std::ptrdiff_t>(starts.size());
  const std::size_t block = window * width;
#pragma omp parallel for schedule(static) if (worth_parallel(starts.size() * block))
  for (std::ptrdiff_t w = 0; w < nw; ++w) {
    std::memcpy(out.data() + static_cast<std::size_t>(w) * block,
                src.data() + starts[static_cast<std::size_t>(w)] * width,
                block * sizeof(double));
  }
}

}  // namespace omp
}  // namespace ygan::kernels
