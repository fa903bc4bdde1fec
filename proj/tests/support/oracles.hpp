// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations of the evaluation metrics and a
// grid-search oracle for the L1 logistic objective.  Written for clarity,
// accumulate in long double and share no code with the library.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "yieldgan/rng.hpp"
#include "yieldgan/sampling.hpp"

namespace ygan::testing::oracle {

double rmse(const std::vector<double>& p, const std::vector<double>& t);
/// Percent; points with |t| < floor are skipped unless include_all.
double mape(const std::vector<double>& p, const std::vector<double>& t, bool include_all,
            double floor);
double pearson(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> histogram(const std::vector<double>& v, std::size_t bins, double lo,
                              double hi);
std::vector<double> autocorr(const std::vector<double>& x, std::size_t max_lag);
/// Pooled within-sample autocorrelation, skipping constant series.
std::vector<double> pooled_autocorr(const sampling::SampleSet& s, std::size_t max_lag);
double diversity(const sampling::SampleSet& s);
/// Pairwise (pos, neg) count with ties credited 1/2, over pos * neg.
double auc_pairs(const std::vector<double>& scores, const std::vector<double>& labels);

/// min over (b0, beta) of the L1 logistic objective by coarse-to-fine grid
/// search in [-5, 5]^(p+1), refined to a 0.01 step.
double logistic_grid_min(const std::vector<double>& X, std::size_t p,
                         const std::vector<double>& y, double lambda);

/// Random SampleSet with a binary "recession" attribute.
sampling::SampleSet random_sample_set(Rng& rng, std::size_t n, std::size_t T, std::size_t F);

struct MetricCheck {
  std::string metric;
  double max_error = 0.0;
  std::size_t instances = 0;
  bool auc_exact = true;
};

/// Runs every metric against its oracle on `instances` random instances.
std::vector<MetricCheck> check_metrics(std::size_t instances, std::uint64_t seed);

}  // namespace ygan::testing::oracle
