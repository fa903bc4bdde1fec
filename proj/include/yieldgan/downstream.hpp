// SPDX-License-Identifier: Apache-2.0
//
// Predictive models trained on real, synthetic or combined sets: a stacked
// LSTM forecaster, an L1-regularized logistic recession classifier and an
// LSTM recession classifier.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "yieldgan/nets.hpp"
#include "yieldgan/sampling.hpp"

namespace ygan::downstream {

using sampling::SupervisedSet;

/// Per-feature affine map of the training range [lo, hi] onto [-1, 1].
struct MinMaxScaler {
  std::vector<double> lo;
  std::vector<double> hi;

  /// Fits on row-major data with F columns.
  static MinMaxScaler fit(std::span<const double> data, std::size_t F);
  static MinMaxScaler fit(const SupervisedSet& set);
  double scale(std::size_t f, double x) const;
  double unscale(std::size_t f, double y) const;
  /// In-place transform of row-major data with F = lo.size() columns.
  void transform(std::span<double> data) const;
  void inverse(std::span<double> data) const;
  bool operator==(const MinMaxScaler&) const = default;
};

// ---------------------------------------------------------------------------
// Forecaster

struct ForecasterConfig {
  std::vector<std::size_t> hidden{64, 64};
  double dropout = 0.2;
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const ForecasterConfig& c);
ForecasterConfig forecaster_config_from_json(const nlohmann::json& j,
                                             const ForecasterConfig& base = {});

class ForecastModel {
 public:
  ForecastModel() = default;
  ForecastModel(const ForecasterConfig& config, std::size_t W, std::size_t H, std::size_t F,
                MinMaxScaler scaler, Rng& rng);

  /// Scaled inputs (B x W*F) to scaled outputs (B x H*F).
  ad::Var forward(ad::Tape& tape, const ad::Tensor& scaled_inputs, nets::Mode mode,
                  Rng* rng) const;
  /// Forecast H x F in original units for one W x F window (eval mode).
  std::vector<double> forecast(std::span<const double> window) const;
  /// Forecasts for n windows laid out back to back.
  std::vector<double> forecast_batch(std::span<const double> windows, std::size_t n) const;

  std::size_t W() const { return W_; }
  std::size_t H() const { return H_; }
  std::size_t F() const { return F_; }
  const ForecasterConfig& config() const { return config_; }
  const MinMaxScaler& scaler() const { return scaler_; }
  std::vector<ad::Parameter*> parameters();

  nets::LstmStack lstm;
  nets::Dense head;

 private:
  ForecasterConfig config_;
  std::size_t W_ = 0, H_ = 0, F_ = 0;
  MinMaxScaler scaler_;
};

struct ForecastTrainResult {
  ForecastModel model;
  std::vector<double> losses;  // mean scaled-space MSE per epoch
};

ForecastTrainResult train_forecaster(const SupervisedSet& set, const ForecasterConfig& config);

// ---------------------------------------------------------------------------
// L1 logistic regression

/// sign(v) * max(|v| - t, 0).
double soft_threshold(double v, double t);

/// Sum of negative log-likelihoods plus lambda * |beta|_1 (intercept free).
/// X is M x p row-major, y in {0, 1}.
double logistic_objective(std::span<const double> X, std::span<const double> y,
                          std::span<const double> beta, double intercept, double lambda);

struct ProxOptions {
  std::size_t max_iterations = 20000;
  double tolerance = 1e-9;  // relative objective change
};

struct ProxResult {
  std::vector<double> beta;
  double intercept = 0.0;
  std::vector<double> objective;  // value at the start and after each iteration
  std::size_t iterations = 0;
  bool converged = false;
  bool single_class = false;  // only the intercept was fitted
};

/// Monotone accelerated proximal gradient with backtracking from beta = 0,
/// intercept = 0.
ProxResult fit_logistic_l1(std::span<const double> X, std::size_t p, std::span<const double> y,
                           double lambda, const ProxOptions& options = {});

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;
  bool operator==(const Standardizer&) const = default;
};

struct LogisticConfig {
  std::optional<double> lambda;  // unset: choose by cross-validation
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::size_t folds = 5;
  bool standardize = true;
  ProxOptions prox;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const LogisticConfig& c);
LogisticConfig logistic_config_from_json(const nlohmann::json& j, const LogisticConfig& base = {});

struct LogisticModel {
  std::vector<double> beta;  // W*F, day-major lags of (y1, y10)
  double intercept = 0.0;
  double lambda = 0.0;
  Standardizer standardizer;
  std::size_t W = 0;
  std::size_t F = 0;
  bool single_class = false;
  std::vector<double> cv_loss;  // mean held-out log-loss per grid value, if CV ran
};

/// Flattens each window day-major, standardizes on the training set and fits.
LogisticModel train_logistic_l1(const SupervisedSet& set, const LogisticConfig& config);

/// sigmoid(intercept + beta . standardized window).
double logistic_predict(const LogisticModel& model, std::span<const double> window);

// ---------------------------------------------------------------------------
// LSTM classifier

struct ClassifierConfig {
  std::size_t hidden = 64;
  double dropout = 0.2;
  std::size_t dense = 100;
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const ClassifierConfig& c);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j,
                                             const ClassifierConfig& base = {});

class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(const ClassifierConfig& config, std::size_t W, std::size_t F,
                  MinMaxScaler scaler, Rng& rng);

  /// Scaled inputs (B x W*F) to class probabilities (B x 2).
  ad::Var forward(ad::Tape& tape, const ad::Tensor& scaled_inputs, nets::Mode mode,
                  Rng* rng) const;
  /// (p_negative, p_positive) for one window.
  std::pair<double, double> probabilities(std::span<const double> window) const;
  /// Positive-class probability.
  double classify(std::span<const double> window) const;
  std::vector<double> classify_batch(std::span<const double> windows, std::size_t n) const;

  std::size_t W() const { return W_; }
  std::size_t F() const { return F_; }
  const ClassifierConfig& config() const { return config_; }
  const MinMaxScaler& scaler() const { return scaler_; }
  std::vector<ad::Parameter*> parameters();

  nets::LstmStack lstm;
  nets::Dense dense;
  nets::Dense out;

 private:
  ClassifierConfig config_;
  std::size_t W_ = 0, F_ = 0;
  MinMaxScaler scaler_;
};

struct ClassifierTrainResult {
  ClassifierModel model;
  std::vector<double> losses;
  double train_accuracy = 0.0;
};

ClassifierTrainResult train_lstm_classifier(const SupervisedSet& set,
                                            const ClassifierConfig& config);

}  // namespace ygan::downstream
