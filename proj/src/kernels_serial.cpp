// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels.  Plain loops, no blocking, no threading.
#include <cmath>
#include <cstring>

#include "yieldgan/kernels.hpp"

namespace ygan::kernels::serial {

void gemm(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = 0; j < s.m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < s.k; ++p) {
        const double av = ta == Trans::No ? a[i * s.k + p] : a[p * s.n + i];
        const double bv = tb == Trans::No ? b[p * s.m + j] : b[j * s.k + p];
        acc += av * bv;
      }
      c[i * s.m + j] = accumulate ? c[i * s.m + j] + acc : acc;
    }
  }
}

void tanh(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
}

void sigmoid(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
}

void row_autocorr(std::span<const double> rows, std::size_t n_rows, std::size_t length,
                  std::size_t max_lag, std::span<double> out,
                  std::span<unsigned char> degenerate) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* x = rows.data() + r * length;
    double mean = 0.0;
    for (std::size_t t = 0; t < length; ++t) mean += x[t];
    mean /= static_cast<double>(length);
    double var = 0.0;
    for (std::size_t t = 0; t < length; ++t) var += (x[t] - mean) * (x[t] - mean);
    degenerate[r] = var == 0.0 ? 1 : 0;
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      double cov = 0.0;
      for (std::size_t t = 0; t + lag < length; ++t) cov += (x[t] - mean) * (x[t + lag] - mean);
      out[r * (max_lag + 1) + lag] = var == 0.0 ? 0.0 : cov / var;
    }
  }
}

double mean_pairwise_distance(std::span<const double> rows, std::size_t n_rows,
                              std::size_t dim) {
  if (n_rows < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = i + 1; j < n_rows; ++j) {
      double d2 = 0.0;
      for (std::size_t q = 0; q < dim; ++q) {
        const double d = rows[i * dim + q] - rows[j * dim + q];
        d2 += d * d;
      }
      total += std::sqrt(d2);
    }
  }
  const double pairs = 0.5 * static_cast<double>(n_rows) * static_cast<double>(n_rows - 1);
  return total / pairs;
}

void gather_windows(std::span<const double> src, std::size_t width,
                    std::span<const std::size_t> starts, std::size_t window,
                    std::span<double> out) {
  for (std::size_t w = 0; w < starts.size(); ++w) {
    for (std::size_t t = 0; t < window; ++t) {
      for (std::size_t f = 0; f < width; ++f) {
        out[(w * window + t) * width + f] = src[(starts[w] + t) * width + f];
      }
    }
  }
}

}  // namespace ygan::kernels::serial
