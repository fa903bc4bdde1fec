// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/experiment.hpp"

#include <chrono>
#include <cstdio>

#include "yieldgan/checkpoint.hpp"
#include "yieldgan/error.hpp"
#include "yieldgan/sampling.hpp"

namespace ygan::experiment {

using ingest::format_double;
using ingest::YieldPanel;
using sampling::SampleSet;
using sampling::SupervisedSet;

namespace fs = std::filesystem;

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             std::uint64_t seed, const nlohmann::json& extra) {
  nlohmann::json m = extra.is_object() ? extra : nlohmann::json::object();
  m["command"] = command;
  m["config"] = config;
  m["config_hash"] = config_hash(config);
  m["seed"] = seed;
  return m;
}

nlohmann::json to_json(const DateRange& r) { return {{"start", r.start}, {"end", r.end}}; }

namespace {

DateRange range_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be an object {start, end}");
  DateRange r;
  for (const auto& [key, v] : j.items()) {
    if (key == "start") r.start = v.get<std::string>();
    else if (key == "end") r.end = v.get<std::string>();
    else throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
  }
  return r;
}

ingest::Date parse_config_date(const std::string& s) {
  try {
    return ingest::parse_date(s);
  } catch (const DataError& e) {
    throw ConfigError(std::string("bad date in config: ") + e.what());
  }
}

void check_range(const DateRange& r, const char* what) {
  if (parse_config_date(r.start) > parse_config_date(r.end)) {
    throw ConfigError(std::string(what) + ": start is after end");
  }
}

void check_disjoint(const DateRange& train, const DateRange& test, const char* what) {
  if (!(parse_config_date(train.end) < parse_config_date(test.start) ||
        parse_config_date(test.end) < parse_config_date(train.start))) {
    throw ConfigError(std::string(what) + ": training and test ranges overlap");
  }
}

template <typename Fn>
void parse_keys(const nlohmann::json& j, const char* what, Fn&& fn) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    bool known = false;
    try {
      known = fn(key, v);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(what) + ": bad value for '" + key + "': " + e.what());
    }
    if (!known) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  ingest::write_text_file(path, j.dump(2) + "\n");
}

// Trains the GAN on the segments, or loads the configured checkpoint.
dgan::GeneratorBundle obtain_generator(const dgan::DGanConfig& gan,
                                       const std::optional<std::string>& checkpoint,
                                       const SampleSet& segments, const fs::path& out_dir) {
  if (checkpoint) {
    auto g = checkpoint::load_dgan(*checkpoint);
    if (g.config().T != segments.T) {
      throw ConfigError("gan checkpoint has T=" + std::to_string(g.config().T) +
                        ", experiment segments have T=" + std::to_string(segments.T));
    }
    return g;
  }
  auto res = dgan::train_dgan(gan, segments);
  ingest::write_text_file(out_dir / "gan_history.csv", dgan::history_to_csv(res.history));
  checkpoint::save(out_dir / "gan.ckpt", res.bundle);
  return std::move(res.bundle);
}

dgan::DGanConfig seeded_gan(dgan::DGanConfig gan, std::uint64_t seed) {
  gan.seed = derive_seed(seed, "experiment.gan");
  return gan;
}

}  // namespace

YieldPanel slice(const YieldPanel& panel, const DateRange& r) {
  return ingest::slice_period(panel, parse_config_date(r.start), parse_config_date(r.end));
}

std::optional<YieldPanel> after(const YieldPanel& panel, ingest::Date last) {
  if (panel.empty() || !(last < panel.dates.back())) return std::nullopt;
  return ingest::slice_period(panel, last + std::chrono::days{1}, panel.dates.back());
}

std::vector<std::string> classifier_window_dates(const YieldPanel& panel, std::size_t W,
                                                 std::size_t h, const YieldPanel* extension) {
  const auto total = panel.size() + (extension ? extension->size() : 0);
  std::vector<std::string> dates;
  for (std::size_t i = 0; i + W <= panel.size() && i + W + h <= total; ++i) {
    dates.push_back(ingest::format_date(panel.dates[i + W - 1]));
  }
  return dates;
}

ForecastCell score_feature(std::span<const double> pred, std::span<const double> truth,
                           std::size_t F, std::size_t f, bool mape_include_all) {
  std::vector<double> p, t;
  for (std::size_t i = f; i < pred.size(); i += F) {
    p.push_back(pred[i]);
    t.push_back(truth[i]);
  }
  ForecastCell c;
  c.rmse = metrics::rmse(p, t);
  const auto m = metrics::mape(p, t, mape_include_all);
  c.mape = m.value;
  c.mape_excluded = m.excluded;
  return c;
}

// ---------------------------------------------------------------------------
// Forecasting

void ForecastExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("forecast experiment: " + m); };
  check_range(gan_train, "gan_train");
  check_range(train, "train");
  check_range(test, "test");
  check_disjoint(train, test, "forecast experiment");
  check_disjoint(gan_train, test, "forecast experiment (gan)");
  if (window == 0) fail("window must be positive");
  if (horizons.empty()) fail("horizons must not be empty");
  for (auto h : horizons) {
    if (h == 0) fail("horizons must be positive");
    if (window + h > gan.T) fail("window + horizon exceeds the segment length gan.T");
  }
  if (n_generated == 0) fail("n_generated must be positive");
  gan.validate();
}

nlohmann::json to_json(const ForecastExperimentConfig& c) {
  nlohmann::json j = {{"id", c.id},
                      {"gan_train", to_json(c.gan_train)},
                      {"train", to_json(c.train)},
                      {"test", to_json(c.test)},
                      {"window", c.window},
                      {"horizons", c.horizons},
                      {"n_generated", c.n_generated},
                      {"gan", dgan::to_json(c.gan)},
                      {"forecaster", downstream::to_json(c.forecaster)},
                      {"mape_include_all", c.mape_include_all},
                      {"seed", c.seed}};
  j["gan_checkpoint"] = c.gan_checkpoint ? nlohmann::json(*c.gan_checkpoint) : nlohmann::json();
  return j;
}

ForecastExperimentConfig forecast_experiment_from_json(const nlohmann::json& j,
                                                       const ForecastExperimentConfig& base) {
  ForecastExperimentConfig c = base;
  parse_keys(j, "forecast experiment", [&](const std::string& key, const nlohmann::json& v) {
    if (key == "id") c.id = v.get<std::string>();
    else if (key == "gan_train") c.gan_train = range_from_json(v, "gan_train");
    else if (key == "train") c.train = range_from_json(v, "train");
    else if (key == "test") c.test = range_from_json(v, "test");
    else if (key == "window") c.window = v.get<std::size_t>();
    else if (key == "horizons") c.horizons = v.get<std::vector<std::size_t>>();
    else if (key == "n_generated") c.n_generated = v.get<std::size_t>();
    else if (key == "gan") c.gan = dgan::dgan_config_from_json(v, c.gan);
    else if (key == "forecaster") c.forecaster = downstream::forecaster_config_from_json(v, c.forecaster);
    else if (key == "mape_include_all") c.mape_include_all = v.get<bool>();
    else if (key == "gan_checkpoint") {
      c.gan_checkpoint = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
    } else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

nlohmann::json to_json(const ForecastReport& r) {
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& h : r.horizons) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : h.cells) {
      cells.push_back({{"variant", c.variant},
                       {"feature", c.feature},
                       {"rmse", c.rmse},
                       {"mape", c.mape},
                       {"mape_excluded", c.mape_excluded}});
    }
    hs.push_back({{"horizon", h.horizon},
                  {"n_test", h.dates.size()},
                  {"train_sizes", h.train_sizes},
                  {"cells", cells}});
  }
  return {{"id", r.id},
          {"config_hash", r.config_hash},
          {"seed", r.seed},
          {"features", r.features},
          {"real_segments", r.real_segments},
          {"generated_segments", r.generated_segments},
          {"horizons", hs}};
}

ForecastReport run_experiment_forecast(const ForecastExperimentConfig& config,
                                       const YieldPanel& panel, const fs::path& out_dir) {
  config.validate();
  const auto cfg_json = to_json(config);
  ForecastReport report;
  report.id = config.id;
  report.config_hash = config_hash(cfg_json);
  report.seed = config.seed;
  report.features = {"y1", "y10"};
  const std::size_t F = 2;

  const auto gan_panel = slice(panel, config.gan_train);
  const auto train_panel = slice(panel, config.train);
  const auto test_panel = slice(panel, config.test);

  const auto segments = sampling::segment_gan_samples(gan_panel, config.gan.T, {});
  report.real_segments = segments.n;
  const auto gen = obtain_generator(seeded_gan(config.gan, config.seed), config.gan_checkpoint,
                                    segments, out_dir);
  const auto synth = dgan::generate(gen, config.n_generated,
                                    derive_seed(config.seed, "experiment.generate"));
  report.generated_segments = synth.n;
  sampling::write_sample_set(segments, out_dir / "real_segments.json");
  sampling::write_sample_set(synth, out_dir / "synthetic_segments.json");
  metrics::write_fidelity_report(
      metrics::fidelity_report(segments, synth, std::min<std::size_t>(100, config.gan.T - 1)),
      out_dir / "fidelity");

  for (const auto H : config.horizons) {
    HorizonReport hr;
    hr.horizon = H;
    const auto real = sampling::rolling_windows(train_panel, config.window, H);
    const auto syn = sampling::windows_from_synthetic(synth, config.window, H);
    const auto combined = sampling::combine_sets(real, syn);
    const SupervisedSet* sets[] = {&real, &syn, &combined};

    const auto test = sampling::rolling_windows(test_panel, config.window, H);
    for (std::size_t i = 0; i < test.n; ++i) {
      hr.dates.push_back(ingest::format_date(test_panel.dates[i + config.window + H - 1]));
      const auto t = test.target(i);
      hr.truth.insert(hr.truth.end(), t.end() - static_cast<std::ptrdiff_t>(F), t.end());
    }

    for (std::size_t v = 0; v < kVariants.size(); ++v) {
      const auto& variant = kVariants[v];
      auto fc = config.forecaster;
      fc.seed = derive_seed(config.seed, "experiment.forecaster." + variant + ".h" + std::to_string(H));
      const auto trained = downstream::train_forecaster(*sets[v], fc);
      hr.train_sizes.push_back(sets[v]->n);
      checkpoint::save(out_dir / ("forecaster_h" + std::to_string(H) + "_" + variant + ".ckpt"),
                       trained.model);

      const auto all = trained.model.forecast_batch(test.inputs, test.n);
      std::vector<double> last;  // the H-th forecast day
      last.reserve(test.n * F);
      for (std::size_t i = 0; i < test.n; ++i) {
        const auto row = all.begin() + static_cast<std::ptrdiff_t>((i * H + H - 1) * F);
        last.insert(last.end(), row, row + static_cast<std::ptrdiff_t>(F));
      }
      for (std::size_t f = 0; f < F; ++f) {
        auto cell = score_feature(last, hr.truth, F, f, config.mape_include_all);
        cell.variant = variant;
        cell.feature = report.features[f];
        hr.cells.push_back(cell);
      }
      hr.predictions.push_back(std::move(last));
    }

    const auto tag = "h" + std::to_string(H);
    std::string table = "variant,feature,rmse,mape,mape_excluded\n";
    for (const auto& c : hr.cells) {
      table += c.variant + "," + c.feature + "," + format_double(c.rmse) + "," +
               format_double(c.mape) + "," + std::to_string(c.mape_excluded) + "\n";
    }
    ingest::write_text_file(out_dir / ("table_" + tag + ".csv"), table);

    std::string curve = "date,y1_true,y10_true";
    for (const auto& v : kVariants) curve += ",y1_" + v + ",y10_" + v;
    curve += "\n";
    for (std::size_t i = 0; i < hr.dates.size(); ++i) {
      curve += hr.dates[i];
      for (std::size_t f = 0; f < F; ++f) curve += "," + format_double(hr.truth[i * F + f]);
      for (const auto& p : hr.predictions) {
        for (std::size_t f = 0; f < F; ++f) curve += "," + format_double(p[i * F + f]);
      }
      curve += "\n";
    }
    ingest::write_text_file(out_dir / ("forecasts_" + tag + ".csv"), curve);
    report.horizons.push_back(std::move(hr));
  }

  write_json(out_dir / "report.json", to_json(report));
  write_json(out_dir / "manifest.json",
             make_manifest("run-experiment forecast", cfg_json, config.seed,
                           {{"panel_days", panel.size()},
                            {"train_days", train_panel.size()},
                            {"test_days", test_panel.size()}}));
  return report;
}

// ---------------------------------------------------------------------------
// Recession classification

void RecessionExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("recession experiment: " + m); };
  check_range(gan_train, "gan_train");
  check_range(train, "train");
  check_range(test, "test");
  check_disjoint(train, test, "recession experiment");
  check_disjoint(gan_train, test, "recession experiment (gan)");
  if (window == 0 || lookahead == 0) fail("window and lookahead must be positive");
  if (gan.T < window) fail("segment length gan.T is shorter than the window");
  if (n_generated == 0) fail("n_generated must be positive");
  gan.validate();
}

nlohmann::json to_json(const RecessionExperimentConfig& c) {
  nlohmann::json j = {{"id", c.id},
                      {"gan_train", to_json(c.gan_train)},
                      {"train", to_json(c.train)},
                      {"test", to_json(c.test)},
                      {"window", c.window},
                      {"lookahead", c.lookahead},
                      {"n_generated", c.n_generated},
                      {"use_post_cutoff_labels", c.use_post_cutoff_labels},
                      {"gan", dgan::to_json(c.gan)},
                      {"logistic", downstream::to_json(c.logistic)},
                      {"classifier", downstream::to_json(c.classifier)},
                      {"seed", c.seed}};
  j["gan_checkpoint"] = c.gan_checkpoint ? nlohmann::json(*c.gan_checkpoint) : nlohmann::json();
  return j;
}

RecessionExperimentConfig recession_experiment_from_json(const nlohmann::json& j,
                                                         const RecessionExperimentConfig& base) {
  RecessionExperimentConfig c = base;
  parse_keys(j, "recession experiment", [&](const std::string& key, const nlohmann::json& v) {
    if (key == "id") c.id = v.get<std::string>();
    else if (key == "gan_train") c.gan_train = range_from_json(v, "gan_train");
    else if (key == "train") c.train = range_from_json(v, "train");
    else if (key == "test") c.test = range_from_json(v, "test");
    else if (key == "window") c.window = v.get<std::size_t>();
    else if (key == "lookahead") c.lookahead = v.get<std::size_t>();
    else if (key == "n_generated") c.n_generated = v.get<std::size_t>();
    else if (key == "use_post_cutoff_labels") c.use_post_cutoff_labels = v.get<bool>();
    else if (key == "gan") c.gan = dgan::dgan_config_from_json(v, c.gan);
    else if (key == "logistic") c.logistic = downstream::logistic_config_from_json(v, c.logistic);
    else if (key == "classifier") c.classifier = downstream::classifier_config_from_json(v, c.classifier);
    else if (key == "gan_checkpoint") {
      c.gan_checkpoint = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
    } else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

nlohmann::json to_json(const ClassificationReport& r) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& c : r.results) {
    results.push_back({{"model", c.model},
                       {"variant", c.variant},
                       {"train_size", c.train_size},
                       {"auc", c.roc.auc}});
  }
  std::size_t positives = 0;
  for (double l : r.labels) positives += l == 1.0;
  return {{"id", r.id},
          {"config_hash", r.config_hash},
          {"seed", r.seed},
          {"n_test", r.dates.size()},
          {"test_positives", positives},
          {"first_date", r.dates.empty() ? "" : r.dates.front()},
          {"last_date", r.dates.empty() ? "" : r.dates.back()},
          {"results", results}};
}

ClassificationReport run_experiment_recession(const RecessionExperimentConfig& config,
                                              const YieldPanel& panel, const fs::path& out_dir) {
  config.validate();
  const auto cfg_json = to_json(config);
  ClassificationReport report;
  report.id = config.id;
  report.config_hash = config_hash(cfg_json);
  report.seed = config.seed;

  const auto gan_panel = slice(panel, config.gan_train);
  const auto train_panel = slice(panel, config.train);
  const auto test_panel = slice(panel, config.test);

  sampling::AttributePlan plan;
  plan.future_lookahead = config.lookahead;
  const auto segments = sampling::segment_gan_samples(gan_panel, config.gan.T, plan);
  const auto gen = obtain_generator(seeded_gan(config.gan, config.seed), config.gan_checkpoint,
                                    segments, out_dir);
  const auto synth = dgan::generate(gen, config.n_generated,
                                    derive_seed(config.seed, "experiment.generate"));
  sampling::write_sample_set(segments, out_dir / "real_segments.json");
  sampling::write_sample_set(synth, out_dir / "synthetic_segments.json");
  metrics::write_fidelity_report(
      metrics::fidelity_report(segments, synth, std::min<std::size_t>(100, config.gan.T - 1)),
      out_dir / "fidelity");

  const auto train_ext = config.use_post_cutoff_labels ? after(panel, train_panel.dates.back())
                                                       : std::nullopt;
  const auto real = sampling::rolling_classifier_windows(
      train_panel, config.window, config.lookahead, train_ext ? &*train_ext : nullptr);
  const auto syn =
      sampling::classifier_windows_from_synthetic(synth, config.window, config.lookahead);
  const auto combined = sampling::combine_sets(real, syn);
  const SupervisedSet* sets[] = {&real, &syn, &combined};

  const auto test_ext = after(panel, test_panel.dates.back());
  const auto test = sampling::rolling_classifier_windows(
      test_panel, config.window, config.lookahead, test_ext ? &*test_ext : nullptr);
  report.dates = classifier_window_dates(test_panel, config.window, config.lookahead,
                                         test_ext ? &*test_ext : nullptr);
  report.labels = test.targets;

  for (const std::string model : {"logistic", "lstm"}) {
    for (std::size_t v = 0; v < kVariants.size(); ++v) {
      const auto& variant = kVariants[v];
      const auto seed = derive_seed(config.seed, "experiment." + model + "." + variant);
      ClassifierResult res;
      res.model = model;
      res.variant = variant;
      res.train_size = sets[v]->n;
      const auto ckpt = out_dir / (model + "_" + variant + ".ckpt");
      if (model == "logistic") {
        auto lc = config.logistic;
        lc.seed = seed;
        const auto m = downstream::train_logistic_l1(*sets[v], lc);
        checkpoint::save(ckpt, m);
        for (std::size_t i = 0; i < test.n; ++i) {
          res.probabilities.push_back(downstream::logistic_predict(m, test.input(i)));
        }
      } else {
        auto cc = config.classifier;
        cc.seed = seed;
        const auto trained = downstream::train_lstm_classifier(*sets[v], cc);
        checkpoint::save(ckpt, trained.model);
        res.probabilities = trained.model.classify_batch(test.inputs, test.n);
      }
      res.roc = metrics::roc_auc(res.probabilities, report.labels);

      std::string roc = "threshold,fpr,tpr\n";
      for (std::size_t k = 0; k < res.roc.fpr.size(); ++k) {
        roc += format_double(res.roc.thresholds[k]) + "," + format_double(res.roc.fpr[k]) + "," +
               format_double(res.roc.tpr[k]) + "\n";
      }
      ingest::write_text_file(out_dir / ("roc_" + model + "_" + variant + ".csv"), roc);
      report.results.push_back(std::move(res));
    }
  }

  std::string curve = "date,label";
  for (const auto& r : report.results) curve += "," + r.model + "_" + r.variant;
  curve += "\n";
  for (std::size_t i = 0; i < report.dates.size(); ++i) {
    curve += report.dates[i] + "," + format_double(report.labels[i]);
    for (const auto& r : report.results) curve += "," + format_double(r.probabilities[i]);
    curve += "\n";
  }
  ingest::write_text_file(out_dir / "probabilities.csv", curve);

  std::string auc = "model,variant,auc\n";
  for (const auto& r : report.results) {
    auc += r.model + "," + r.variant + "," + format_double(r.roc.auc) + "\n";
  }
  ingest::write_text_file(out_dir / "auc.csv", auc);

  write_json(out_dir / "report.json", to_json(report));
  write_json(out_dir / "manifest.json",
             make_manifest("run-experiment recession", cfg_json, config.seed,
                           {{"panel_days", panel.size()},
                            {"real_train_windows", real.n},
                            {"gan_segments", segments.n}}));
  return report;
}

}  // namespace ygan::experiment
