// SPDX-License-Identifier: Apache-2.0
//
// Dense numeric kernels.  Every kernel exists twice:
//
//   kernels::serial  straightforward reference loops, kept for testing
//   kernels::omp     OpenMP-parallel production versions
//
// The parallel versions split work over independent output rows and reduce
// row partials in a fixed order, so their results do not depend on the thread
// count.  The unqualified kernels::* entry points forward to kernels::omp.
#pragma once

#include <cstddef>
#include <span>

namespace ygan::kernels {

enum class Trans { No, Yes };

/// Shape of C(n x m) = op(A) * op(B) with inner dimension k.  op(A) is n x k
/// (A stored k x n when transposed); op(B) is k x m (B stored m x k when
/// transposed).
struct GemmShape {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 0;
};

namespace serial {

void gemm(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);
void tanh(std::span<const double> in, std::span<double> out);
void sigmoid(std::span<const double> in, std::span<double> out);
void row_autocorr(std::span<const double> rows, std::size_t n_rows, std::size_t length,
                  std::size_t max_lag, std::span<double> out,
                  std::span<unsigned char> degenerate);
double mean_pairwise_distance(std::span<const double> rows, std::size_t n_rows,
                              std::size_t dim);
void gather_windows(std::span<const double> src, std::size_t width,
                    std::span<const std::size_t> starts, std::size_t window,
                    std::span<double> out);

}  // namespace serial

namespace omp {

void gemm(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate);
void tanh(std::span<const double> in, std::span<double> out);
void sigmoid(std::span<const double> in, std::span<double> out);

/// Biased lag-l autocorrelation of each row,
///   r(l) = sum_{t<len-l} (x_t - mean)(x_{t+l} - mean) / sum_t (x_t - mean)^2,
/// written to out[row * (max_lag + 1) + l].  Constant rows are flagged in
/// `degenerate` and their outputs left at zero.
void row_autocorr(std::span<const double> rows, std::size_t n_rows, std::size_t length,
                  std::size_t max_lag, std::span<double> out,
                  std::span<unsigned char> degenerate);

/// Mean Euclidean distance over all unordered pairs of rows.
double mean_pairwise_distance(std::span<const double> rows, std::size_t n_rows,
                              std::size_t dim);

/// src is row-major with `width` columns.  For each start s, copies rows
/// [s, s + window) contiguously into out.
void gather_windows(std::span<const double> src, std::size_t width,
                    std::span<const std::size_t> starts, std::size_t window,
                    std::span<double> out);

}  // namespace omp

using omp::gather_windows;
using omp::gemm;
using omp::mean_pairwise_distance;
using omp::row_autocorr;
using omp::sigmoid;
using omp::tanh;

int max_threads();

}  // namespace ygan::kernels
