// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "yieldgan/downstream.hpp"
#include "yieldgan/error.hpp"

namespace ygan::downstream {
namespace {

using sampling::SupervisedSet;
using sampling::TargetKind;

SupervisedSet forecast_set(std::size_t n, std::size_t W, std::size_t H, Rng& rng,
                           bool constant = false) {
  SupervisedSet s;
  s.kind = TargetKind::Forecast;
  s.n = n;
  s.W = W;
  s.H = H;
  s.F = 2;
  for (std::size_t i = 0; i < n * W * 2; ++i) s.inputs.push_back(rng.uniform(0, 5));
  for (std::size_t i = 0; i < n * H * 2; ++i) s.targets.push_back(constant ? 2.5 : rng.uniform(0, 5));
  return s;
}

// Windows labeled by the sign of their mean.
SupervisedSet sign_set(std::size_t n, std::size_t W, Rng& rng) {
  SupervisedSet s;
  s.kind = TargetKind::Classification;
  s.n = n;
  s.W = W;
  s.H = 10;
  s.F = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const double level = rng.uniform(-1.0, 1.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < W * 2; ++k) {
      const double v = level + 0.3 * rng.normal();
      s.inputs.push_back(v);
      sum += v;
    }
    s.targets.push_back(sum > 0.0 ? 1.0 : 0.0);
  }
  return s;
}

TEST(Scaler, MapsRangeToUnitIntervalAndBack) {
  const std::vector<double> data{0.0, 5.0, 10.0, 5.0, 5.0, 5.0};
  const auto sc = MinMaxScaler::fit(data, 2);
  EXPECT_EQ(sc.scale(0, 0.0), -1.0);
  EXPECT_EQ(sc.scale(0, 10.0), 1.0);
  EXPECT_EQ(sc.scale(1, 5.0), 0.0);  // constant column is centred
  EXPECT_EQ(sc.unscale(1, 0.25), 5.25);
  auto copy = data;
  sc.transform(copy);
  sc.inverse(copy);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(copy[i], data[i], 1e-12);
}

// Random inputs, every target equal to one constant.
TEST(Forecaster, ConstantDatasetConverges) {
  Rng rng(1);
  const auto set = forecast_set(100, 25, 1, rng, true);
  ForecasterConfig cfg;
  cfg.hidden = {16, 16};
  cfg.batch_size = 16;
  cfg.seed = 3;
  const auto r = train_forecaster(set, cfg);
  ASSERT_EQ(r.losses.size(), 50u);
  const auto pred = r.model.forecast_batch(set.inputs, set.n);
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) mse += (pred[i] - 2.5) * (pred[i] - 2.5);
  mse /= static_cast<double>(pred.size());
  EXPECT_LT(mse, 1e-3);
  EXPECT_LT(r.losses.back(), r.losses.front());
}

TEST(Forecaster, DeterministicAndShaped) {
  Rng rng(2);
  const auto set = forecast_set(40, 6, 15, rng);
  ForecasterConfig cfg;
  cfg.hidden = {8, 8};
  cfg.epochs = 2;
  cfg.seed = 4;
  const auto a = train_forecaster(set, cfg);
  const auto b = train_forecaster(set, cfg);
  EXPECT_EQ(a.losses, b.losses);
  auto pa = a.model, pb = b.model;
  const auto qa = pa.parameters(), qb = pb.parameters();
  for (std::size_t k = 0; k < qa.size(); ++k) EXPECT_EQ(qa[k]->value, qb[k]->value);
  const auto f = a.model.forecast(set.input(0));
  EXPECT_EQ(f.size(), 15u * 2u);
  EXPECT_EQ(f, a.model.forecast(set.input(0)));
  const auto batch = a.model.forecast_batch(set.inputs, set.n);
  EXPECT_TRUE(std::equal(f.begin(), f.end(), batch.begin()));
  EXPECT_THROW(a.model.forecast(std::vector<double>(5)), Error);
}

TEST(Forecaster, HorizonOneGivesOneDay) {
  Rng rng(3);
  const auto set = forecast_set(20, 5, 1, rng);
  ForecasterConfig cfg;
  cfg.hidden = {4};
  cfg.epochs = 1;
  EXPECT_EQ(train_forecaster(set, cfg).model.forecast(set.input(0)).size(), 2u);
}

TEST(Logistic, SoftThresholdClosedForm) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-3, 3), t = rng.uniform(0, 2);
    const double expect = v > t ? v - t : (v < -t ? v + t : 0.0);
    EXPECT_EQ(soft_threshold(v, t), expect);
  }
}

TEST(Logistic, InitialObjectiveIsMLog2AndMonotone) {
  Rng rng(5);
  const std::size_t M = 40, p = 3;
  std::vector<double> X(M * p), y(M);
  for (auto& v : X) v = rng.normal();
  for (std::size_t m = 0; m < M; ++m) y[m] = X[m * p] + 0.5 * rng.normal() > 0 ? 1.0 : 0.0;
  const auto r = fit_logistic_l1(X, p, y, 0.5);
  EXPECT_NEAR(r.objective.front(), static_cast<double>(M) * std::log(2.0), 1e-12);
  for (std::size_t k = 1; k < r.objective.size(); ++k) {
    EXPECT_LE(r.objective[k], r.objective[k - 1]);
  }
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(logistic_objective(X, y, r.beta, r.intercept, 0.5), r.objective.back(), 1e-9);
}

TEST(Logistic, LargeLambdaZeroesCoefficients) {
  Rng rng(6);
  const std::size_t M = 30, p = 4;
  std::vector<double> X(M * p), y(M);
  for (auto& v : X) v = rng.normal();
  for (std::size_t m = 0; m < M; ++m) y[m] = m % 3 == 0 ? 1.0 : 0.0;
  const auto r = fit_logistic_l1(X, p, y, 1e4);
  for (double b : r.beta) EXPECT_EQ(b, 0.0);
  const double best = logistic_objective(X, y, r.beta, std::log(10.0 / 20.0), 1e4);
  EXPECT_NEAR(r.objective.back(), best, 1e-6);
}

TEST(Logistic, SixSampleGridOracle) {
  Rng rng(7);
  const std::vector<double> X{0.5, -1.0, 1.5, 0.2, -0.3, 0.8, -1.2, -0.4, 0.9, 1.1, -0.7, 0.3};
  const std::vector<double> y{1, 0, 1, 0, 1, 0};
  const double lambda = 0.3;
  const auto r = fit_logistic_l1(X, 2, y, lambda);
  const double grid = testing::oracle::logistic_grid_min(X, 2, y, lambda);
  EXPECT_NEAR(r.objective.back(), grid, 1e-3);
  EXPECT_LE(r.objective.back(), grid + 1e-9);
}

TEST(Logistic, SingleClassFitsInterceptOnly) {
  const std::vector<double> X{1, 2, 3, 4}, y{1, 1, 1, 1};
  const auto r = fit_logistic_l1(X, 1, y, 0.1);
  EXPECT_TRUE(r.single_class);
  EXPECT_EQ(r.beta[0], 0.0);
  EXPECT_GT(r.intercept, 0.0);
  EXPECT_THROW(fit_logistic_l1(X, 1, std::vector<double>{0, 2, 1, 0}, 0.1), DataError);
  EXPECT_THROW(fit_logistic_l1(X, 1, y, -1.0), ConfigError);
}

TEST(Logistic, PredictProperties) {
  Rng rng(8);
  LogisticModel m;
  m.W = 3;
  m.F = 2;
  m.beta.assign(6, 0.0);
  m.standardizer.mean.assign(6, 0.0);
  m.standardizer.sd.assign(6, 1.0);
  std::vector<double> w(6);
  for (auto& v : w) v = rng.normal();
  EXPECT_EQ(logistic_predict(m, w), 0.5);
  for (std::size_t j = 0; j < 6; ++j) {
    m.beta[j] = rng.normal();
    m.standardizer.mean[j] = rng.normal();
    m.standardizer.sd[j] = rng.uniform(0.5, 2.0);
  }
  m.intercept = 0.3;
  const double p = logistic_predict(m, w);
  double z = 0.3;
  for (std::size_t j = 0; j < 6; ++j) {
    z += m.beta[j] * (w[j] - m.standardizer.mean[j]) / m.standardizer.sd[j];
  }
  EXPECT_NEAR(p, 1.0 / (1.0 + std::exp(-z)), 1e-15);
  for (auto& b : m.beta) b = -b;
  m.intercept = -m.intercept;
  EXPECT_NEAR(logistic_predict(m, w), 1.0 - p, 1e-15);
  EXPECT_THROW(logistic_predict(m, std::vector<double>(5)), DataError);
}

TEST(Logistic, TrainingStandardizesAndCrossValidates) {
  Rng rng(9);
  const auto set = sign_set(200, 3, rng);
  LogisticConfig cfg;
  cfg.seed = 1;
  const auto m = train_logistic_l1(set, cfg);
  EXPECT_EQ(m.cv_loss.size(), cfg.lambda_grid.size());
  EXPECT_NE(std::find(cfg.lambda_grid.begin(), cfg.lambda_grid.end(), m.lambda),
            cfg.lambda_grid.end());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.n; ++i) {
    correct += (logistic_predict(m, set.input(i)) >= 0.5) == (set.targets[i] == 1.0);
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(set.n), 0.95);
  // Standardized training columns have zero mean and unit sd.
  for (std::size_t j = 0; j < 6; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < set.n; ++i) {
      mean += (set.inputs[i * 6 + j] - m.standardizer.mean[j]) / m.standardizer.sd[j];
    }
    mean /= static_cast<double>(set.n);
    for (std::size_t i = 0; i < set.n; ++i) {
      const double z = (set.inputs[i * 6 + j] - m.standardizer.mean[j]) / m.standardizer.sd[j];
      var += (z - mean) * (z - mean);
    }
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var / static_cast<double>(set.n), 1.0, 1e-9);
  }
  cfg.lambda = 0.05;
  const auto fixed = train_logistic_l1(set, cfg);
  EXPECT_EQ(fixed.lambda, 0.05);
  EXPECT_TRUE(fixed.cv_loss.empty());
}

TEST(Classifier, LearnsSignOfMean) {
  Rng rng(10);
  const auto set = sign_set(300, 10, rng);
  ClassifierConfig cfg;
  cfg.hidden = 16;
  cfg.dense = 16;
  cfg.epochs = 30;
  cfg.batch_size = 32;
  cfg.learning_rate = 5e-3;
  cfg.seed = 2;
  const auto r = train_lstm_classifier(set, cfg);
  EXPECT_GE(r.train_accuracy, 0.95);
  const auto [pn, pp] = r.model.probabilities(set.input(0));
  EXPECT_NEAR(pn + pp, 1.0, 1e-9);
  EXPECT_EQ(r.model.classify(set.input(0)), pp);
  EXPECT_EQ(r.model.classify(set.input(0)), r.model.classify(set.input(0)));
  const auto batch = r.model.classify_batch(set.inputs, set.n);
  EXPECT_EQ(batch[0], pp);
}

TEST(Classifier, SameSeedSameModelAndRowsSumToOne) {
  Rng rng(11);
  const auto set = sign_set(50, 5, rng);
  ClassifierConfig cfg;
  cfg.hidden = 4;
  cfg.dense = 4;
  cfg.epochs = 2;
  const auto a = train_lstm_classifier(set, cfg);
  const auto b = train_lstm_classifier(set, cfg);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.model.classify_batch(set.inputs, set.n), b.model.classify_batch(set.inputs, set.n));
  ad::Tape t;
  auto scaled = set.inputs;
  a.model.scaler().transform(scaled);
  const auto& probs =
      t.value(a.model.forward(t, ad::Tensor({set.n, 10}, scaled), nets::Mode::Eval, nullptr));
  for (std::size_t i = 0; i < set.n; ++i) EXPECT_NEAR(probs.at(i, 0) + probs.at(i, 1), 1.0, 1e-9);
}

TEST(DownstreamConfig, JsonRoundTripsAndRejectsUnknownKeys) {
  ForecasterConfig f;
  f.hidden = {3, 4};
  EXPECT_EQ(to_json(forecaster_config_from_json(to_json(f))), to_json(f));
  EXPECT_THROW(forecaster_config_from_json({{"hiden", 1}}), ConfigError);
  LogisticConfig l;
  l.lambda = 0.2;
  EXPECT_EQ(to_json(logistic_config_from_json(to_json(l))), to_json(l));
  ClassifierConfig c;
  EXPECT_EQ(to_json(classifier_config_from_json(to_json(c))), to_json(c));
  EXPECT_THROW(classifier_config_from_json({{"x", 1}}), ConfigError);
}

}  // namespace
}  // namespace ygan::downstream
