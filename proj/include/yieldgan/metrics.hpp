// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics: point-forecast errors, correlation, autocorrelation,
// histograms, attribute proportions, sample diversity and ROC/AUC, plus the
// fidelity report comparing a real and a synthetic sample set.
#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "yieldgan/sampling.hpp"

namespace ygan::metrics {

double rmse(std::span<const double> pred, std::span<const double> truth);

inline constexpr double kMapeFloor = 0.01;

struct MapeResult {
  double value = 0.0;  // percent
  std::size_t included = 0;
  std::size_t excluded = 0;
};

/// 100 * mean |p - t| / |t| over points with |t| >= floor, or over every
/// point when include_all is set.  Throws DataError if nothing is included.
MapeResult mape(std::span<const double> pred, std::span<const double> truth,
                bool include_all = false, double floor = kMapeFloor);

double pearson_corr(std::span<const double> a, std::span<const double> b);

struct SampleAutocorr {
  std::vector<std::vector<double>> per_feature;  // [feature][lag]
  std::vector<double> pooled;                    // [lag], over samples and features
  std::size_t skipped = 0;                       // constant (sample, feature) series
};

/// Within-sample biased autocorrelation for lags 0..max_lag averaged over
/// samples.  Constant series are skipped and counted.
SampleAutocorr avg_sample_autocorr(const sampling::SampleSet& set, std::size_t max_lag);

/// Biased autocorrelation of one undivided series for lags 0..max_lag.
std::vector<double> full_series_autocorr(std::span<const double> series, std::size_t max_lag);

/// Bin masses over `bins` equal-width bins on [lo, hi].  Values outside the
/// range are counted in the first or last bin.
std::vector<double> histogram(std::span<const double> values, std::size_t bins, double lo,
                              double hi);

double attribute_proportion(const sampling::SampleSet& set, const std::string& attr);

/// Mean pairwise L2 distance between flattened samples divided by the mean
/// sample norm.  0 iff all samples are identical.
double diversity_score(const sampling::SampleSet& set);
double diversity_score(std::span<const double> rows, std::size_t n, std::size_t dim);

struct RocCurve {
  std::vector<double> thresholds;  // +inf first, then distinct scores descending
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

/// Threshold sweep over the distinct scores; predictions are positive when
/// score >= threshold.  AUC is the trapezoidal area, equal to the pairwise
/// probability with ties credited 1/2.
RocCurve roc_auc(std::span<const double> scores, std::span<const double> labels);

/// One feature's column across every sample of a set, in sample order.
std::vector<double> feature_column(const sampling::SampleSet& set, std::size_t f);

struct FeatureHistogram {
  std::string feature;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> real;
  std::vector<double> synthetic;
};

struct AttributeProportion {
  std::string attribute;
  double real = 0.0;
  double synthetic = 0.0;
};

struct FidelityReport {
  std::vector<std::string> features;
  std::vector<FeatureHistogram> histograms;
  double real_correlation = 0.0;       // between the first two features
  double synthetic_correlation = 0.0;
  SampleAutocorr synthetic_autocorr;
  SampleAutocorr real_autocorr;
  std::vector<std::vector<double>> real_full_autocorr;  // [feature][lag]
  std::vector<AttributeProportion> proportions;
  double real_diversity = 0.0;
  double synthetic_diversity = 0.0;
  std::size_t max_lag = 0;
};

FidelityReport fidelity_report(const sampling::SampleSet& real,
                               const sampling::SampleSet& synthetic, std::size_t max_lag,
                               std::size_t bins = 50);

nlohmann::json to_json(const FidelityReport& r);
nlohmann::json to_json(const RocCurve& r);
/// report.json, histogram_<feature>.csv and autocorrelation.csv under dir.
void write_fidelity_report(const FidelityReport& r, const std::filesystem::path& dir);

}  // namespace ygan::metrics
