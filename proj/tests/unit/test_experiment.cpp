// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "yieldgan/error.hpp"
#include "yieldgan/experiment.hpp"

namespace ygan::experiment {
namespace {

namespace fs = std::filesystem;
using ingest::read_text_file;

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text_file(p)); }

ForecastExperimentConfig small_forecast() {
  ForecastExperimentConfig c;
  c.id = "forecast-unit";
  c.gan_train = {"1995-01-02", "2008-12-31"};
  c.train = c.gan_train;
  c.test = {"2009-01-02", "2010-12-31"};
  c.window = 10;
  c.horizons = {1, 5};
  c.n_generated = 10;
  c.gan = dgan::dgan_config_from_json(
      {{"T", 30}, {"S", 5}, {"attr_hidden", {8}}, {"meta_hidden", {8}}, {"lstm_hidden", {8}},
       {"critic_hidden", {16}}, {"aux_hidden", {8}}, {"epochs", 1}, {"batch_size", 20},
       {"diversity_probe", 4}});
  c.forecaster.hidden = {4, 4};
  c.forecaster.epochs = 1;
  c.forecaster.batch_size = 256;
  c.seed = 3;
  return c;
}

RecessionExperimentConfig small_recession() {
  RecessionExperimentConfig c;
  c.id = "recession-unit";
  c.gan_train = {"1985-01-01", "1999-12-31"};
  c.train = c.gan_train;
  c.test = {"2000-01-03", "2009-06-30"};
  c.window = 30;
  c.lookahead = 60;
  c.n_generated = 200;
  c.gan = dgan::dgan_config_from_json(
      {{"T", 30}, {"S", 5}, {"attr_hidden", {8}}, {"meta_hidden", {8}}, {"lstm_hidden", {8}},
       {"critic_hidden", {16}}, {"aux_hidden", {8}}, {"epochs", 1}, {"batch_size", 20},
       {"diversity_probe", 4}});
  c.logistic.lambda_grid = {0.1, 1.0};
  c.logistic.folds = 2;
  c.logistic.prox.tolerance = 1e-6;
  c.classifier.hidden = 4;
  c.classifier.dense = 4;
  c.classifier.epochs = 1;
  c.classifier.batch_size = 256;
  c.seed = 4;
  return c;
}

const ingest::YieldPanel& panel() {
  static const auto p = testing::synthetic_panel({"1985-01-01", "2012-12-31", 0.0, 7});
  return p;
}

TEST(Experiment, ConfigHashIsStableAndKeyOrderFree) {
  const nlohmann::json a = {{"x", 1}, {"y", {1, 2}}};
  const nlohmann::json b = nlohmann::json::parse(R"({"y":[1,2],"x":1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(a), config_hash({{"x", 2}, {"y", {1, 2}}}));
  const auto m = make_manifest("cmd", a, 7, {{"extra", true}});
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["config_hash"], config_hash(a));
  EXPECT_TRUE(m["extra"].get<bool>());
}

TEST(Experiment, ValidationRejectsBadConfigs) {
  auto f = small_forecast();
  f.test = {"2005-01-03", "2010-12-31"};
  EXPECT_THROW(f.validate(), ConfigError);
  f = small_forecast();
  f.horizons = {25};
  EXPECT_THROW(f.validate(), ConfigError);
  auto r = small_recession();
  r.window = 40;
  EXPECT_THROW(r.validate(), ConfigError);
  EXPECT_THROW(forecast_experiment_from_json({{"windw", 3}}), ConfigError);
}

TEST(Experiment, ShippedConfigsParse) {
  const fs::path root = YGAN_SOURCE_DIR;
  const auto f = forecast_experiment_from_json(read_json(root / "configs/full_scale_forecast.json"));
  EXPECT_NO_THROW(f.validate());
  EXPECT_EQ(f.test.start, "2017-01-03");
  EXPECT_EQ(f.test.end, "2023-01-11");
  EXPECT_EQ(f.gan.T, 125u);
  EXPECT_EQ(f.gan.S, 5u);
  EXPECT_EQ(f.gan.generator_lr, 1e-4);
  EXPECT_EQ(f.gan.epochs, 2000u);
  EXPECT_EQ(f.n_generated, 1000u);
  EXPECT_EQ(f.forecaster.epochs, 50u);
  const auto r =
      recession_experiment_from_json(read_json(root / "configs/full_scale_recession.json"));
  EXPECT_NO_THROW(r.validate());
  EXPECT_EQ(r.test.start, "1985-01-02");
  EXPECT_EQ(r.test.end, "2009-06-30");
  EXPECT_EQ(r.classifier.epochs, 50u);
  EXPECT_NO_THROW(forecast_experiment_from_json(read_json(root / "configs/smoke_forecast.json")));
  EXPECT_NO_THROW(recession_experiment_from_json(read_json(root / "configs/smoke_recession.json")));
}

TEST(Experiment, ForecastRunLayoutAndDeterminism) {
  const auto a = fs::path(testing::temp_dir("fx_a")), b = fs::path(testing::temp_dir("fx_b"));
  const auto cfg = small_forecast();
  const auto report = run_experiment_forecast(cfg, panel(), a);
  ASSERT_EQ(report.horizons.size(), 2u);
  for (const auto& h : report.horizons) {
    EXPECT_EQ(h.cells.size(), 6u);  // 3 variants x 2 features, each with rmse and mape
    for (const auto& c : h.cells) {
      EXPECT_TRUE(std::isfinite(c.rmse));
      EXPECT_TRUE(std::isfinite(c.mape));
    }
    EXPECT_EQ(h.train_sizes[2], h.train_sizes[0] + h.train_sizes[1]);
    EXPECT_EQ(h.train_sizes[1], cfg.n_generated * (cfg.gan.T - cfg.window - h.horizon + 1));
    // The evaluated day is the H-th after the window, inside the test range.
    EXPECT_GE(h.dates.front(), cfg.test.start);
    EXPECT_LE(h.dates.back(), cfg.test.end);
  }
  run_experiment_forecast(cfg, panel(), b);
  for (const char* f : {"report.json", "manifest.json", "gan.ckpt", "table_h1.csv",
                        "forecasts_h5.csv", "forecaster_h5_combined.ckpt", "gan_history.csv",
                        "synthetic_segments.csv", "fidelity/report.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
  }
  const auto manifest = read_json(a / "manifest.json");
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["config_hash"], report.config_hash);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, RecessionRunLayoutAndDeterminism) {
  const auto a = fs::path(testing::temp_dir("rx_a")), b = fs::path(testing::temp_dir("rx_b"));
  const auto cfg = small_recession();
  const auto report = run_experiment_recession(cfg, panel(), a);
  ASSERT_EQ(report.results.size(), 6u);
  for (const auto& r : report.results) {
    EXPECT_GE(r.roc.auc, 0.0);
    EXPECT_LE(r.roc.auc, 1.0);
    EXPECT_EQ(r.probabilities.size(), report.dates.size());
  }
  // One probability per test day from the end of the first full window.
  const auto test = slice(panel(), cfg.test);
  EXPECT_EQ(report.dates.size(), test.size() - cfg.window + 1);
  EXPECT_EQ(report.dates.front(), ingest::format_date(test.dates[cfg.window - 1]));
  EXPECT_EQ(report.dates.back(), ingest::format_date(test.dates.back()));
  run_experiment_recession(cfg, panel(), b);
  for (const char* f : {"report.json", "auc.csv", "probabilities.csv", "logistic_real.ckpt",
                        "lstm_combined.ckpt", "roc_lstm_synthetic.csv", "manifest.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, RecessionTestRangeHoldsThreeEpisodes) {
  const auto test = slice(testing::synthetic_panel(), {"1985-01-02", "2009-06-30"});
  EXPECT_EQ(ingest::count_recession_episodes(test), 3u);
}

TEST(Experiment, ScoreFeatureMatchesMetrics) {
  const std::vector<double> pred{1.0, 2.0, 3.0, 4.0}, truth{1.0, 4.0, 3.0, 2.0};
  const auto c = score_feature(pred, truth, 2, 1, false);
  EXPECT_DOUBLE_EQ(c.rmse, std::sqrt(4.0));
  EXPECT_DOUBLE_EQ(c.mape, 100.0 * 0.5 * (0.5 + 1.0));
}

}  // namespace
}  // namespace ygan::experiment
