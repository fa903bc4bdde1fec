// SPDX-License-Identifier: Apache-2.0
//
// End-to-end pipelines for the two experiments: yield forecasting with
// real, synthetic and combined training sets, and recession classification
// with the same three variants.  Each run writes its artifacts, reports and a
// manifest (config hash and seed) under an output directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "yieldgan/dgan.hpp"
#include "yieldgan/downstream.hpp"
#include "yieldgan/ingest.hpp"
#include "yieldgan/metrics.hpp"

namespace ygan::experiment {

/// FNV-1a 64 over the compact JSON dump (keys sorted), as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// {"command", "config", "config_hash", "seed", ...extra}.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             std::uint64_t seed, const nlohmann::json& extra = {});

struct DateRange {
  std::string start;
  std::string end;
};

nlohmann::json to_json(const DateRange& r);

/// Training-set variants in report order.
inline const std::vector<std::string> kVariants{"real", "synthetic", "combined"};

// ---------------------------------------------------------------------------
// Forecasting

struct ForecastExperimentConfig {
  std::string id = "forecast";
  DateRange gan_train{"1962-01-02", "2016-12-30"};
  DateRange train{"1962-01-02", "2016-12-30"};
  DateRange test{"2017-01-03", "2023-01-11"};
  std::size_t window = 25;
  std::vector<std::size_t> horizons{1, 15};
  std::size_t n_generated = 1000;
  dgan::DGanConfig gan;  // gan.T is the segment length
  downstream::ForecasterConfig forecaster;
  bool mape_include_all = false;
  std::optional<std::string> gan_checkpoint;  // load instead of training
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const ForecastExperimentConfig& c);
ForecastExperimentConfig forecast_experiment_from_json(const nlohmann::json& j,
                                                       const ForecastExperimentConfig& base = {});

struct ForecastCell {
  std::string variant;
  std::string feature;
  double rmse = 0.0;
  double mape = 0.0;
  std::size_t mape_excluded = 0;
};

struct HorizonReport {
  std::size_t horizon = 0;
  std::vector<std::size_t> train_sizes;  // per variant
  std::vector<ForecastCell> cells;       // variant-major, then feature
  std::vector<std::string> dates;        // date of the evaluated (H-th) day
  std::vector<double> truth;             // n x F
  std::vector<std::vector<double>> predictions;  // per variant, n x F
};

struct ForecastReport {
  std::string id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> features;
  std::size_t real_segments = 0;
  std::size_t generated_segments = 0;
  std::vector<HorizonReport> horizons;
};

nlohmann::json to_json(const ForecastReport& r);

/// Runs the forecasting pipeline on an aligned panel and writes artifacts
/// under out_dir.
ForecastReport run_experiment_forecast(const ForecastExperimentConfig& config,
                                       const ingest::YieldPanel& panel,
                                       const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Recession classification

struct RecessionExperimentConfig {
  std::string id = "recession";
  DateRange gan_train{"1962-01-02", "1984-12-31"};
  DateRange train{"1962-01-02", "1984-12-31"};
  DateRange test{"1985-01-02", "2009-06-30"};
  std::size_t window = 30;
  std::size_t lookahead = 250;
  std::size_t n_generated = 50000;
  bool use_post_cutoff_labels = true;
  dgan::DGanConfig gan = default_gan();
  downstream::LogisticConfig logistic;
  downstream::ClassifierConfig classifier;
  std::optional<std::string> gan_checkpoint;
  std::uint64_t seed = 0;

  static dgan::DGanConfig default_gan() {
    dgan::DGanConfig g;
    g.T = 30;
    return g;
  }
  void validate() const;
};

nlohmann::json to_json(const RecessionExperimentConfig& c);
RecessionExperimentConfig recession_experiment_from_json(
    const nlohmann::json& j, const RecessionExperimentConfig& base = {});

struct ClassifierResult {
  std::string model;    // logistic | lstm
  std::string variant;  // real | synthetic | combined
  std::size_t train_size = 0;
  metrics::RocCurve roc;
  std::vector<double> probabilities;  // one per test window
};

struct ClassificationReport {
  std::string id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> dates;  // last day of each test window
  std::vector<double> labels;
  std::vector<ClassifierResult> results;  // model-major, then variant
};

nlohmann::json to_json(const ClassificationReport& r);

ClassificationReport run_experiment_recession(const RecessionExperimentConfig& config,
                                              const ingest::YieldPanel& panel,
                                              const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Helpers shared with the command-line tool

/// Slice of `panel` for a range, with ConfigError for an unparsable date.
ingest::YieldPanel slice(const ingest::YieldPanel& panel, const DateRange& r);

/// The part of `panel` strictly after `last`, or nullopt when empty.
std::optional<ingest::YieldPanel> after(const ingest::YieldPanel& panel, ingest::Date last);

/// Date of the last day of each W-day window of `panel` whose h-day label
/// lookahead fits in panel ++ extension, in window order.
std::vector<std::string> classifier_window_dates(const ingest::YieldPanel& panel, std::size_t W,
                                                 std::size_t h,
                                                 const ingest::YieldPanel* extension);

/// RMSE and MAPE of one feature column.
ForecastCell score_feature(std::span<const double> pred, std::span<const double> truth,
                           std::size_t F, std::size_t f, bool mape_include_all);

}  // namespace ygan::experiment
