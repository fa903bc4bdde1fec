// SPDX-License-Identifier: Apache-2.0
//
// yieldgan: command-line front end for ingestion, sample construction, GAN
// training and generation, downstream models, evaluation and the two
// end-to-end experiments.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// failure.  Relative output paths are resolved against $YGAN_OUTPUT_ROOT
// when it is set.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "yieldgan/checkpoint.hpp"
#include "yieldgan/dgan.hpp"
#include "yieldgan/downstream.hpp"
#include "yieldgan/error.hpp"
#include "yieldgan/experiment.hpp"
#include "yieldgan/ingest.hpp"
#include "yieldgan/metrics.hpp"
#include "yieldgan/sampling.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ygan;

namespace {

fs::path output_path(const std::string& p) {
  fs::path path(p);
  const char* root = std::getenv("YGAN_OUTPUT_ROOT");
  if (root && *root && path.is_relative()) return fs::path(root) / path;
  return path;
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(ingest::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

// Values from --config replace the matching flags.  Keys may use hyphens or
// underscores; keys that name no flag are left for the model configuration.
class Overrides {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    j_ = read_json_file(path);
    if (!j_.is_object()) throw ConfigError("config " + path + " must hold a JSON object");
  }

  template <typename T>
  void take(const std::string& flag, T& target) {
    for (const auto& key : {flag, underscored(flag)}) {
      auto it = j_.find(key);
      if (it == j_.end()) continue;
      try {
        target = it->template get<T>();
      } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
      effective_[underscored(flag)] = *it;
      j_.erase(it);
      return;
    }
    effective_[underscored(flag)] = target;
  }

  template <typename T>
  void take(const std::string& flag, std::optional<T>& target) {
    for (const auto& key : {flag, underscored(flag)}) {
      auto it = j_.find(key);
      if (it == j_.end()) continue;
      try {
        target = it->is_null() ? std::nullopt : std::optional<T>(it->template get<T>());
      } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
      j_.erase(it);
      break;
    }
    effective_[underscored(flag)] = target ? json(*target) : json();
  }

  /// Keys not consumed by take().
  const json& rest() const { return j_; }
  void require_empty() const {
    if (!j_.empty()) throw ConfigError("config: unknown key '" + j_.begin().key() + "'");
  }
  /// Flag values after overrides, for manifests.
  json& effective() { return effective_; }

 private:
  static std::string underscored(std::string s) {
    for (auto& c : s) {
      if (c == '-') c = '_';
    }
    return s;
  }

  json j_ = json::object();
  json effective_ = json::object();
};

void write_manifest(const fs::path& artifact, const std::string& command, const json& config,
                    std::uint64_t seed) {
  const auto path = fs::is_directory(artifact) ? artifact / "manifest.json"
                                               : fs::path(artifact.string() + ".manifest.json");
  ingest::write_text_file(path,
                          experiment::make_manifest(command, config, seed).dump(2) + "\n");
}

ingest::YieldPanel maybe_slice(const ingest::YieldPanel& panel, const std::string& start,
                               const std::string& end) {
  if (start.empty() && end.empty()) return panel;
  experiment::DateRange r{start.empty() ? ingest::format_date(panel.dates.front()) : start,
                          end.empty() ? ingest::format_date(panel.dates.back()) : end};
  return experiment::slice(panel, r);
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string y1, y10, rec, start, end, missing = "drop-day", out, config;
};

int cmd_ingest(IngestArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("y1", a.y1);
  o.take("y10", a.y10);
  o.take("rec", a.rec);
  o.take("start", a.start);
  o.take("end", a.end);
  o.take("missing", a.missing);
  o.take("out", a.out);
  o.require_empty();
  if (a.y1.empty() || a.y10.empty() || a.rec.empty() || a.out.empty()) {
    throw ConfigError("ingest needs --y1, --y10, --rec and --out");
  }
  const auto policy = ingest::missing_policy_from_name(a.missing);
  auto panel = ingest::align_panel(ingest::read_fred_csv(a.y1), ingest::read_fred_csv(a.y10),
                                   ingest::read_fred_csv(a.rec), policy);
  panel = maybe_slice(panel, a.start, a.end);
  const auto out = output_path(a.out);
  ingest::write_panel(panel, out);
  auto cfg = o.effective();
  cfg["missing_policy"] = ingest::missing_policy_name(policy);
  write_manifest(out, "ingest", cfg, 0);
  std::cout << "panel: " << panel.size() << " days " << ingest::format_date(panel.dates.front())
            << ".." << ingest::format_date(panel.dates.back()) << " -> " << out.string() << "\n";
  return 0;
}

struct MakeSamplesArgs {
  std::string panel, kind, start, end, out, config;
  std::size_t window = 0;
  std::size_t horizon = 1;
  std::optional<std::size_t> lookahead;
  bool post_cutoff = true;
};

int cmd_make_samples(MakeSamplesArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("panel", a.panel);
  o.take("kind", a.kind);
  o.take("window", a.window);
  o.take("horizon", a.horizon);
  o.take("lookahead", a.lookahead);
  o.take("start", a.start);
  o.take("end", a.end);
  o.take("post-cutoff", a.post_cutoff);
  o.take("out", a.out);
  o.require_empty();
  if (a.panel.empty() || a.out.empty()) throw ConfigError("make-samples needs --panel and --out");
  if (a.window == 0) throw ConfigError("make-samples needs --window > 0");
  const auto full = ingest::read_panel(a.panel);
  const auto panel = maybe_slice(full, a.start, a.end);
  const auto out = output_path(a.out);

  std::size_t n = 0;
  if (a.kind == "gan") {
    sampling::AttributePlan plan;
    plan.future_lookahead = a.lookahead;
    const auto set = sampling::segment_gan_samples(panel, a.window, plan);
    sampling::write_sample_set(set, out);
    n = set.n;
  } else if (a.kind == "forecast") {
    const auto set = sampling::rolling_windows(panel, a.window, a.horizon);
    sampling::write_supervised_set(set, out);
    n = set.n;
  } else if (a.kind == "classify") {
    if (!a.lookahead) throw ConfigError("make-samples --kind classify needs --lookahead");
    const auto ext = a.post_cutoff ? experiment::after(full, panel.dates.back()) : std::nullopt;
    const auto set = sampling::rolling_classifier_windows(panel, a.window, *a.lookahead,
                                                          ext ? &*ext : nullptr);
    sampling::write_supervised_set(set, out);
    n = set.n;
  } else {
    throw ConfigError("make-samples --kind must be gan, forecast or classify");
  }
  write_manifest(out, "make-samples", o.effective(), 0);
  std::cout << a.kind << " samples: " << n << " -> " << out.string() << "\n";
  return 0;
}

struct TrainGanArgs {
  std::string config, data, out, history;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iterations;
};

int cmd_train_gan(TrainGanArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("data", a.data);
  o.take("out", a.out);
  o.take("history", a.history);
  if (a.data.empty() || a.out.empty()) throw ConfigError("train-gan needs --data and --out");
  auto config = dgan::dgan_config_from_json(o.rest());
  if (a.seed && !o.rest().contains("seed")) config.seed = *a.seed;
  if (a.max_iterations && !o.rest().contains("max_iterations")) config.max_iterations = *a.max_iterations;
  config.validate();
  const auto data = sampling::read_sample_set(a.data);
  const auto out = output_path(a.out);

  dgan::TrainResult res;
  const auto history_path =
      a.history.empty() ? fs::path(out.string() + ".history.csv") : output_path(a.history);
  try {
    res = dgan::train_dgan(config, data);
  } catch (const dgan::TrainingAborted& e) {
    ingest::write_text_file(history_path, dgan::history_to_csv(e.history()));
    throw;
  }
  checkpoint::save(out, res.bundle);
  ingest::write_text_file(history_path, dgan::history_to_csv(res.history));
  auto cfg = o.effective();
  cfg["gan"] = dgan::to_json(config);
  write_manifest(out, "train-gan", cfg, config.seed);
  std::cout << "trained " << res.iterations << " iterations over " << res.history.size()
            << " epochs -> " << out.string() << "\n";
  return 0;
}

struct GenerateArgs {
  std::string ckpt, out, config;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

int cmd_generate(GenerateArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("ckpt", a.ckpt);
  o.take("n", a.n);
  o.take("seed", a.seed);
  o.take("out", a.out);
  o.require_empty();
  if (a.ckpt.empty() || a.out.empty()) throw ConfigError("generate needs --ckpt and --out");
  if (a.n == 0) throw ConfigError("generate needs --n > 0");
  const auto g = checkpoint::load_dgan(a.ckpt);
  const auto set = dgan::generate(g, a.n, a.seed);
  const auto out = output_path(a.out);
  sampling::write_sample_set(set, out);
  write_manifest(out, "generate", o.effective(), a.seed);
  std::cout << "generated " << set.n << " samples -> " << out.string() << "\n";
  return 0;
}

struct FidelityArgs {
  std::string real, synth, out, config;
  std::size_t max_lag = 100;
  std::size_t bins = 50;
};

int cmd_fidelity(FidelityArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("real", a.real);
  o.take("synth", a.synth);
  o.take("max-lag", a.max_lag);
  o.take("bins", a.bins);
  o.take("out", a.out);
  o.require_empty();
  if (a.real.empty() || a.synth.empty() || a.out.empty()) {
    throw ConfigError("fidelity needs --real, --synth and --out");
  }
  const auto report = metrics::fidelity_report(sampling::read_sample_set(a.real),
                                               sampling::read_sample_set(a.synth), a.max_lag,
                                               a.bins);
  const auto out = output_path(a.out);
  metrics::write_fidelity_report(report, out);
  write_manifest(out, "fidelity", o.effective(), 0);
  std::cout << "correlation real " << report.real_correlation << " synthetic "
            << report.synthetic_correlation << "; diversity real " << report.real_diversity
            << " synthetic " << report.synthetic_diversity << " -> " << out.string() << "\n";
  return 0;
}

struct TrainForecasterArgs {
  std::string data, out, config;
  std::size_t horizon = 1;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

int cmd_train_forecaster(TrainForecasterArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("data", a.data);
  o.take("horizon", a.horizon);
  o.take("out", a.out);
  if (a.data.empty() || a.out.empty()) throw ConfigError("train-forecaster needs --data and --out");
  auto config = downstream::forecaster_config_from_json(o.rest());
  if (a.epochs && !o.rest().contains("epochs")) config.epochs = *a.epochs;
  if (a.seed && !o.rest().contains("seed")) config.seed = *a.seed;
  const auto set = sampling::read_supervised_set(a.data);
  if (set.kind != sampling::TargetKind::Forecast) {
    throw DataError("train-forecaster: " + a.data + " does not hold forecast targets");
  }
  if (set.H != a.horizon) {
    throw ConfigError("train-forecaster: --horizon " + std::to_string(a.horizon) +
                      " but the data has H=" + std::to_string(set.H));
  }
  const auto res = downstream::train_forecaster(set, config);
  const auto out = output_path(a.out);
  checkpoint::save(out, res.model);
  auto cfg = o.effective();
  cfg["forecaster"] = downstream::to_json(config);
  write_manifest(out, "train-forecaster", cfg, config.seed);
  std::cout << "final training loss " << res.losses.back() << " -> " << out.string() << "\n";
  return 0;
}

struct PanelModelArgs {
  std::string ckpt, panel, out, start, end, config;
};

// Output rows are the forecast for the last horizon day of every complete
// window in the panel, with the realized values alongside.
int cmd_forecast(PanelModelArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("ckpt", a.ckpt);
  o.take("panel", a.panel);
  o.take("start", a.start);
  o.take("end", a.end);
  o.take("out", a.out);
  o.require_empty();
  if (a.ckpt.empty() || a.panel.empty() || a.out.empty()) {
    throw ConfigError("forecast needs --ckpt, --panel and --out");
  }
  const auto model = checkpoint::load_forecaster(a.ckpt);
  const auto panel = maybe_slice(ingest::read_panel(a.panel), a.start, a.end);
  const auto set = sampling::rolling_windows(panel, model.W(), model.H());
  const auto pred = model.forecast_batch(set.inputs, set.n);
  const auto H = model.H();
  const auto F = model.F();
  std::string csv = "date,y1_pred,y10_pred,y1_true,y10_true\n";
  for (std::size_t i = 0; i < set.n; ++i) {
    const auto day = i + model.W() + H - 1;
    csv += ingest::format_date(panel.dates[day]);
    for (std::size_t f = 0; f < F; ++f) csv += "," + ingest::format_double(pred[(i * H + H - 1) * F + f]);
    csv += "," + ingest::format_double(panel.y1[day]) + "," + ingest::format_double(panel.y10[day]);
    csv += "\n";
  }
  const auto out = output_path(a.out);
  ingest::write_text_file(out, csv);
  write_manifest(out, "forecast", o.effective(), 0);
  std::cout << "forecasts: " << set.n << " -> " << out.string() << "\n";
  return 0;
}

struct TrainClassifierArgs {
  std::string kind, data, out, config;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

int cmd_train_classifier(TrainClassifierArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("kind", a.kind);
  o.take("data", a.data);
  o.take("out", a.out);
  if (a.data.empty() || a.out.empty()) throw ConfigError("train-classifier needs --data and --out");
  const auto set = sampling::read_supervised_set(a.data);
  const auto out = output_path(a.out);
  auto cfg = o.effective();
  std::uint64_t seed = 0;
  if (a.kind == "logistic") {
    auto config = downstream::logistic_config_from_json(o.rest());
    if (a.lambda && !o.rest().contains("lambda")) config.lambda = *a.lambda;
    if (a.seed && !o.rest().contains("seed")) config.seed = *a.seed;
    const auto model = downstream::train_logistic_l1(set, config);
    checkpoint::save(out, model);
    cfg["logistic"] = downstream::to_json(config);
    seed = config.seed;
    std::size_t nonzero = 0;
    for (double b : model.beta) nonzero += b != 0.0;
    std::cout << "lambda " << model.lambda << ", " << nonzero << " nonzero coefficients";
    if (model.single_class) std::cout << " (single-class data: intercept only)";
    std::cout << " -> " << out.string() << "\n";
  } else if (a.kind == "lstm") {
    auto config = downstream::classifier_config_from_json(o.rest());
    if (a.epochs && !o.rest().contains("epochs")) config.epochs = *a.epochs;
    if (a.seed && !o.rest().contains("seed")) config.seed = *a.seed;
    const auto res = downstream::train_lstm_classifier(set, config);
    checkpoint::save(out, res.model);
    cfg["classifier"] = downstream::to_json(config);
    seed = config.seed;
    std::cout << "training accuracy " << res.train_accuracy << " -> " << out.string() << "\n";
  } else {
    throw ConfigError("train-classifier --kind must be logistic or lstm");
  }
  write_manifest(out, "train-classifier", cfg, seed);
  return 0;
}

int cmd_classify(PanelModelArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("ckpt", a.ckpt);
  o.take("panel", a.panel);
  o.take("start", a.start);
  o.take("end", a.end);
  o.take("out", a.out);
  o.require_empty();
  if (a.ckpt.empty() || a.panel.empty() || a.out.empty()) {
    throw ConfigError("classify needs --ckpt, --panel and --out");
  }
  const auto panel = maybe_slice(ingest::read_panel(a.panel), a.start, a.end);
  const auto features = sampling::panel_features(panel);
  std::vector<std::string> dates;
  std::vector<double> probs;

  auto windows = [&](std::size_t W, std::size_t F) {
    if (panel.size() < W) throw DataError("classify: panel shorter than the window");
    std::vector<double> all;
    for (std::size_t i = 0; i + W <= panel.size(); ++i) {
      dates.push_back(ingest::format_date(panel.dates[i + W - 1]));
      all.insert(all.end(), features.begin() + static_cast<std::ptrdiff_t>(i * F),
                 features.begin() + static_cast<std::ptrdiff_t>((i + W) * F));
    }
    return all;
  };

  const auto kind = checkpoint::peek_kind(a.ckpt);
  if (kind == checkpoint::Kind::Logistic) {
    const auto m = checkpoint::load_logistic(a.ckpt);
    const auto all = windows(m.W, m.F);
    const auto w = m.W * m.F;
    for (std::size_t i = 0; i < dates.size(); ++i) {
      probs.push_back(downstream::logistic_predict(m, std::span<const double>(all).subspan(i * w, w)));
    }
  } else if (kind == checkpoint::Kind::LstmClassifier) {
    const auto m = checkpoint::load_classifier(a.ckpt);
    const auto all = windows(m.W(), m.F());
    probs = m.classify_batch(all, dates.size());
  } else {
    throw DataError("classify: " + a.ckpt + " holds a " + checkpoint::kind_name(kind) +
                    " model, not a classifier");
  }
  std::string csv = "date,probability\n";
  for (std::size_t i = 0; i < dates.size(); ++i) {
    csv += dates[i] + "," + ingest::format_double(probs[i]) + "\n";
  }
  const auto out = output_path(a.out);
  ingest::write_text_file(out, csv);
  write_manifest(out, "classify", o.effective(), 0);
  std::cout << "probabilities: " << dates.size() << " -> " << out.string() << "\n";
  return 0;
}

struct ExperimentArgs {
  std::string which, panel, config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_run_experiment(ExperimentArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("panel", a.panel);
  o.take("out", a.out);
  if (a.panel.empty() || a.out.empty()) throw ConfigError("run-experiment needs --panel and --out");
  const auto panel = ingest::read_panel(a.panel);
  const auto out = output_path(a.out);
  fs::create_directories(out);
  json rest = o.rest();
  if (a.seed && !o.rest().contains("seed")) rest["seed"] = *a.seed;
  if (a.which == "forecast") {
    const auto config = experiment::forecast_experiment_from_json(rest);
    const auto r = experiment::run_experiment_forecast(config, panel, out);
    for (const auto& h : r.horizons) {
      std::cout << "horizon " << h.horizon << ":\n";
      for (const auto& c : h.cells) {
        std::cout << "  " << c.variant << " " << c.feature << " rmse " << c.rmse << " mape "
                  << c.mape << "\n";
      }
    }
  } else if (a.which == "recession") {
    const auto config = experiment::recession_experiment_from_json(rest);
    const auto r = experiment::run_experiment_recession(config, panel, out);
    for (const auto& c : r.results) {
      std::cout << "  " << c.model << " " << c.variant << " auc " << c.roc.auc << "\n";
    }
  } else {
    throw ConfigError("run-experiment expects forecast or recession");
  }
  std::cout << "reports -> " << out.string() << "\n";
  return 0;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path,
                                                    std::vector<std::string>& header) {
  const auto text = ingest::read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t a = 0;
    for (;;) {
      const auto c = line.find(',', a);
      cells.push_back(line.substr(a, c == std::string::npos ? std::string::npos : c - a));
      if (c == std::string::npos) break;
      a = c + 1;
    }
    if (first) {
      header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != header.size()) throw DataError(path + ": ragged row");
      rows.push_back(std::move(cells));
    }
  }
  if (first) throw DataError(path + ": empty file");
  return rows;
}

double cell_value(const std::string& s, const std::string& path) {
  const auto v = ingest::parse_double(s);
  if (!v) throw DataError(path + ": non-numeric value '" + s + "'");
  return *v;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name,
                   const std::string& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError(path + ": missing column '" + name + "'");
}

struct EvalForecastArgs {
  std::string forecasts, out, config;
  bool mape_include_all = false;
};

int cmd_evaluate_forecasts(EvalForecastArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("forecasts", a.forecasts);
  o.take("mape-include-all", a.mape_include_all);
  o.take("out", a.out);
  o.require_empty();
  if (a.forecasts.empty() || a.out.empty()) {
    throw ConfigError("evaluate-forecasts needs --forecasts and --out");
  }
  std::vector<std::string> header;
  const auto rows = read_csv_rows(a.forecasts, header);
  if (rows.empty()) throw DataError(a.forecasts + ": no rows");
  json cells = json::array();
  for (const std::string f : {"y1", "y10"}) {
    const auto pc = column(header, f + "_pred", a.forecasts);
    const auto tc = column(header, f + "_true", a.forecasts);
    std::vector<double> p, t;
    for (const auto& r : rows) {
      p.push_back(cell_value(r[pc], a.forecasts));
      t.push_back(cell_value(r[tc], a.forecasts));
    }
    auto c = experiment::score_feature(p, t, 1, 0, a.mape_include_all);
    cells.push_back({{"feature", f}, {"rmse", c.rmse}, {"mape", c.mape},
                     {"mape_excluded", c.mape_excluded}});
    std::cout << f << " rmse " << c.rmse << " mape " << c.mape << "\n";
  }
  const auto out = output_path(a.out);
  ingest::write_text_file(out, json{{"n", rows.size()}, {"cells", cells}}.dump(2) + "\n");
  write_manifest(out, "evaluate-forecasts", o.effective(), 0);
  return 0;
}

struct EvalClassifierArgs {
  std::string probs, panel, out, config;
  std::size_t lookahead = 250;
};

// Labels each probability row from the panel: 1 iff a recession day falls in
// the `lookahead` days after the row's date.  Rows without a full lookahead
// are skipped.
int cmd_evaluate_classifier(EvalClassifierArgs a) {
  Overrides o;
  o.load(a.config);
  o.take("probs", a.probs);
  o.take("panel", a.panel);
  o.take("lookahead", a.lookahead);
  o.take("out", a.out);
  o.require_empty();
  if (a.probs.empty() || a.panel.empty() || a.out.empty()) {
    throw ConfigError("evaluate-classifier needs --probs, --panel and --out");
  }
  const auto panel = ingest::read_panel(a.panel);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < panel.size(); ++i) index[ingest::format_date(panel.dates[i])] = i;

  std::vector<std::string> header;
  const auto rows = read_csv_rows(a.probs, header);
  const auto dc = column(header, "date", a.probs);
  const auto pc = column(header, "probability", a.probs);
  std::vector<double> scores, labels;
  std::size_t skipped = 0;
  for (const auto& r : rows) {
    const auto it = index.find(r[dc]);
    if (it == index.end()) throw DataError(a.probs + ": date " + r[dc] + " not in the panel");
    const auto i = it->second;
    if (i + a.lookahead >= panel.size()) {
      ++skipped;
      continue;
    }
    bool any = false;
    for (std::size_t k = i + 1; k <= i + a.lookahead; ++k) any = any || panel.recession[k];
    scores.push_back(cell_value(r[pc], a.probs));
    labels.push_back(any ? 1.0 : 0.0);
  }
  const auto roc = metrics::roc_auc(scores, labels);
  const auto out = output_path(a.out);
  auto j = metrics::to_json(roc);
  j["n"] = scores.size();
  j["skipped"] = skipped;
  ingest::write_text_file(out / "roc.json", j.dump(2) + "\n");
  std::string csv = "threshold,fpr,tpr\n";
  for (std::size_t k = 0; k < roc.fpr.size(); ++k) {
    csv += ingest::format_double(roc.thresholds[k]) + "," + ingest::format_double(roc.fpr[k]) +
           "," + ingest::format_double(roc.tpr[k]) + "\n";
  }
  ingest::write_text_file(out / "roc.csv", csv);
  write_manifest(out, "evaluate-classifier", o.effective(), 0);
  std::cout << "auc " << roc.auc << " over " << scores.size() << " days\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"yieldgan: synthetic Treasury-yield series and downstream models"};
  app.require_subcommand(1);
  std::function<int()> run;

  IngestArgs ingest_args;
  {
    auto* c = app.add_subcommand("ingest", "Align FRED CSV exports into a panel");
    c->add_option("--y1", ingest_args.y1, "1-year yield CSV");
    c->add_option("--y10", ingest_args.y10, "10-year yield CSV");
    c->add_option("--rec", ingest_args.rec, "Daily recession indicator CSV");
    c->add_option("--start", ingest_args.start, "First date (YYYY-MM-DD)");
    c->add_option("--end", ingest_args.end, "Last date (YYYY-MM-DD)");
    c->add_option("--missing", ingest_args.missing, "drop-day or forward-fill");
    c->add_option("--out", ingest_args.out, "Panel CSV to write");
    c->add_option("--config", ingest_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_ingest(ingest_args); }; });
  }

  MakeSamplesArgs ms_args;
  {
    auto* c = app.add_subcommand("make-samples", "Build GAN segments or supervised windows");
    c->add_option("--panel", ms_args.panel, "Panel CSV");
    c->add_option("--kind", ms_args.kind, "gan, forecast or classify");
    c->add_option("--window", ms_args.window, "Segment length T or input window W");
    c->add_option("--horizon", ms_args.horizon, "Forecast horizon H");
    c->add_option("--lookahead", ms_args.lookahead, "Future-recession lookahead h");
    c->add_option("--start", ms_args.start, "First date");
    c->add_option("--end", ms_args.end, "Last date");
    c->add_flag("!--no-post-cutoff", ms_args.post_cutoff,
                "Drop classifier windows whose lookahead passes --end");
    c->add_option("--out", ms_args.out, "Manifest JSON to write");
    c->add_option("--config", ms_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_make_samples(ms_args); }; });
  }

  TrainGanArgs tg_args;
  {
    auto* c = app.add_subcommand("train-gan", "Train the generator and critics");
    c->add_option("--config", tg_args.config, "GAN config JSON");
    c->add_option("--data", tg_args.data, "Sample set manifest");
    c->add_option("--out", tg_args.out, "Checkpoint to write");
    c->add_option("--history", tg_args.history, "Loss history CSV");
    c->add_option("--seed", tg_args.seed, "Seed");
    c->add_option("--max-iterations", tg_args.max_iterations, "Iteration cap");
    c->callback([&] { run = [&] { return cmd_train_gan(tg_args); }; });
  }

  GenerateArgs gen_args;
  {
    auto* c = app.add_subcommand("generate", "Generate synthetic segments");
    c->add_option("--ckpt", gen_args.ckpt, "GAN checkpoint");
    c->add_option("--n", gen_args.n, "Number of samples");
    c->add_option("--seed", gen_args.seed, "Seed");
    c->add_option("--out", gen_args.out, "Sample set manifest to write");
    c->add_option("--config", gen_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_generate(gen_args); }; });
  }

  FidelityArgs fid_args;
  {
    auto* c = app.add_subcommand("fidelity", "Compare real and synthetic sample sets");
    c->add_option("--real", fid_args.real, "Real sample set");
    c->add_option("--synth", fid_args.synth, "Synthetic sample set");
    c->add_option("--max-lag", fid_args.max_lag, "Largest autocorrelation lag");
    c->add_option("--bins", fid_args.bins, "Histogram bins");
    c->add_option("--out", fid_args.out, "Report directory");
    c->add_option("--config", fid_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_fidelity(fid_args); }; });
  }

  TrainForecasterArgs tf_args;
  {
    auto* c = app.add_subcommand("train-forecaster", "Train the LSTM forecaster");
    c->add_option("--data", tf_args.data, "Forecast set manifest");
    c->add_option("--horizon", tf_args.horizon, "1 or 15");
    c->add_option("--epochs", tf_args.epochs, "Training epochs");
    c->add_option("--seed", tf_args.seed, "Seed");
    c->add_option("--out", tf_args.out, "Checkpoint to write");
    c->add_option("--config", tf_args.config, "Forecaster config JSON");
    c->callback([&] { run = [&] { return cmd_train_forecaster(tf_args); }; });
  }

  PanelModelArgs fc_args;
  {
    auto* c = app.add_subcommand("forecast", "Forecast over a panel");
    c->add_option("--ckpt", fc_args.ckpt, "Forecaster checkpoint");
    c->add_option("--panel", fc_args.panel, "Panel CSV");
    c->add_option("--start", fc_args.start, "First date");
    c->add_option("--end", fc_args.end, "Last date");
    c->add_option("--out", fc_args.out, "Forecast CSV to write");
    c->add_option("--config", fc_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_forecast(fc_args); }; });
  }

  TrainClassifierArgs tc_args;
  {
    auto* c = app.add_subcommand("train-classifier", "Train a recession classifier");
    c->add_option("--kind", tc_args.kind, "logistic or lstm");
    c->add_option("--data", tc_args.data, "Classification set manifest");
    c->add_option("--lambda", tc_args.lambda, "L1 strength (default: cross-validated)");
    c->add_option("--epochs", tc_args.epochs, "Training epochs (lstm)");
    c->add_option("--seed", tc_args.seed, "Seed");
    c->add_option("--out", tc_args.out, "Checkpoint to write");
    c->add_option("--config", tc_args.config, "Classifier config JSON");
    c->callback([&] { run = [&] { return cmd_train_classifier(tc_args); }; });
  }

  PanelModelArgs cl_args;
  {
    auto* c = app.add_subcommand("classify", "Recession probabilities over a panel");
    c->add_option("--ckpt", cl_args.ckpt, "Classifier checkpoint");
    c->add_option("--panel", cl_args.panel, "Panel CSV");
    c->add_option("--start", cl_args.start, "First date");
    c->add_option("--end", cl_args.end, "Last date");
    c->add_option("--out", cl_args.out, "CSV date,probability to write");
    c->add_option("--config", cl_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_classify(cl_args); }; });
  }

  ExperimentArgs ex_args;
  {
    auto* c = app.add_subcommand("run-experiment", "Run an end-to-end experiment");
    c->add_option("which", ex_args.which, "forecast or recession")->required();
    c->add_option("--panel", ex_args.panel, "Panel CSV covering every range");
    c->add_option("--config", ex_args.config, "Experiment config JSON");
    c->add_option("--seed", ex_args.seed, "Seed");
    c->add_option("--out", ex_args.out, "Output directory");
    c->callback([&] { run = [&] { return cmd_run_experiment(ex_args); }; });
  }

  EvalForecastArgs ef_args;
  {
    auto* c = app.add_subcommand("evaluate-forecasts", "RMSE and MAPE of a forecast CSV");
    c->add_option("--forecasts", ef_args.forecasts, "CSV written by forecast");
    c->add_flag("--mape-include-all", ef_args.mape_include_all,
                "Keep near-zero truth values in MAPE");
    c->add_option("--out", ef_args.out, "JSON to write");
    c->add_option("--config", ef_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_evaluate_forecasts(ef_args); }; });
  }

  EvalClassifierArgs ec_args;
  {
    auto* c = app.add_subcommand("evaluate-classifier", "ROC and AUC of a probability CSV");
    c->add_option("--probs", ec_args.probs, "CSV written by classify");
    c->add_option("--panel", ec_args.panel, "Panel CSV with the recession column");
    c->add_option("--lookahead", ec_args.lookahead, "Label lookahead in days");
    c->add_option("--out", ec_args.out, "Output directory");
    c->add_option("--config", ec_args.config, "JSON overriding flags");
    c->callback([&] { run = [&] { return cmd_evaluate_classifier(ec_args); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
}
