// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "yieldgan/error.hpp"

namespace ygan::downstream {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using nets::Mode;

namespace {

constexpr std::size_t kEvalChunk = 512;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double log1pexp(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(std::string(what) + ": non-finite value");
  }
}

// One B x F constant per time step from a B x (W*F) block.
std::vector<Var> step_inputs(Tape& tape, const Tensor& x, std::size_t W, std::size_t F) {
  const auto B = x.dim(0);
  std::vector<Var> seq;
  seq.reserve(W);
  for (std::size_t t = 0; t < W; ++t) {
    Tensor step({B, F});
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t f = 0; f < F; ++f) step.at(b, f) = x.at(b, t * F + f);
    }
    seq.push_back(tape.constant(std::move(step)));
  }
  return seq;
}

Tensor scaled_rows(const MinMaxScaler& s, std::span<const double> rows, std::span<const std::size_t> idx,
                   std::size_t width) {
  Tensor t({idx.size(), width});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = rows.subspan(idx[r] * width, width);
    auto dst = t.values().subspan(r * width, width);
    std::copy(src.begin(), src.end(), dst.begin());
    s.transform(dst);
  }
  return t;
}

std::size_t get_size(const nlohmann::json& v) { return v.get<std::size_t>(); }

template <typename Fn>
void for_each_key(const nlohmann::json& j, const char* what, Fn&& fn) {
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

void check_common(std::size_t epochs, std::size_t batch, double lr, double dropout,
                  const char* what) {
  auto fail = [&](const char* m) { throw ConfigError(std::string(what) + ": " + m); };
  if (epochs == 0) fail("epochs must be positive");
  if (batch == 0) fail("batch_size must be positive");
  if (!(lr > 0.0)) fail("learning_rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

}  // namespace

// ---------------------------------------------------------------------------
// Scaling

MinMaxScaler MinMaxScaler::fit(std::span<const double> data, std::size_t F) {
  if (F == 0 || data.empty() || data.size() % F != 0) {
    throw DataError("MinMaxScaler: data is empty or not a multiple of F");
  }
  MinMaxScaler s;
  s.lo.assign(F, std::numeric_limits<double>::infinity());
  s.hi.assign(F, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto f = i % F;
    s.lo[f] = std::min(s.lo[f], data[i]);
    s.hi[f] = std::max(s.hi[f], data[i]);
  }
  return s;
}

MinMaxScaler MinMaxScaler::fit(const SupervisedSet& set) {
  std::vector<double> all = set.inputs;
  if (set.kind == sampling::TargetKind::Forecast) {
    all.insert(all.end(), set.targets.begin(), set.targets.end());
  }
  return fit(all, set.F);
}

double MinMaxScaler::scale(std::size_t f, double x) const {
  const double span = hi[f] - lo[f];
  if (span <= 1e-12) return x - 0.5 * (lo[f] + hi[f]);
  return 2.0 * (x - lo[f]) / span - 1.0;
}

double MinMaxScaler::unscale(std::size_t f, double y) const {
  const double span = hi[f] - lo[f];
  if (span <= 1e-12) return y + 0.5 * (lo[f] + hi[f]);
  return (y + 1.0) * 0.5 * span + lo[f];
}

void MinMaxScaler::transform(std::span<double> data) const {
  const auto F = lo.size();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = scale(i % F, data[i]);
}

void MinMaxScaler::inverse(std::span<double> data) const {
  const auto F = lo.size();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = unscale(i % F, data[i]);
}

// ---------------------------------------------------------------------------
// Forecaster

nlohmann::json to_json(const ForecasterConfig& c) {
  return {{"hidden", c.hidden},           {"dropout", c.dropout},
          {"epochs", c.epochs},           {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}, {"seed", c.seed}};
}

ForecasterConfig forecaster_config_from_json(const nlohmann::json& j, const ForecasterConfig& base) {
  ForecasterConfig c = base;
  for_each_key(j, "forecaster config", [&](const std::string& key, const nlohmann::json& v) {
    if (key == "hidden") c.hidden = v.get<std::vector<std::size_t>>();
    else if (key == "dropout") c.dropout = v.get<double>();
    else if (key == "epochs") c.epochs = get_size(v);
    else if (key == "batch_size") c.batch_size = get_size(v);
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  check_common(c.epochs, c.batch_size, c.learning_rate, c.dropout, "forecaster config");
  if (c.hidden.empty() || std::count(c.hidden.begin(), c.hidden.end(), 0u) > 0) {
    throw ConfigError("forecaster config: hidden must list positive widths");
  }
  return c;
}

ForecastModel::ForecastModel(const ForecasterConfig& config, std::size_t W, std::size_t H,
                             std::size_t F, MinMaxScaler scaler, Rng& rng)
    : lstm("forecaster.lstm", F, config.hidden, rng),
      head("forecaster.head", config.hidden.back(), H * F, nets::Activation::Identity, rng),
      config_(config),
      W_(W),
      H_(H),
      F_(F),
      scaler_(std::move(scaler)) {
  if (W == 0 || H == 0 || F == 0) throw ConfigError("forecaster: W, H and F must be positive");
}

Var ForecastModel::forward(Tape& tape, const Tensor& scaled_inputs, Mode mode, Rng* rng) const {
  const auto seq = step_inputs(tape, scaled_inputs, W_, F_);
  Var h = lstm.forward_last(tape, seq);
  if (mode == Mode::Train && config_.dropout > 0.0) h = nets::dropout(tape, h, config_.dropout, mode, *rng);
  return head.forward(tape, h);
}

std::vector<double> ForecastModel::forecast_batch(std::span<const double> windows,
                                                  std::size_t n) const {
  const auto in_w = W_ * F_;
  const auto out_w = H_ * F_;
  if (windows.size() != n * in_w) throw DataError("forecast: window size mismatch");
  std::vector<double> out(n * out_w);
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < n; first += kEvalChunk) {
    const auto count = std::min(kEvalChunk, n - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    Tape tape;
    const auto y = forward(tape, scaled_rows(scaler_, windows, idx, in_w), Mode::Eval, nullptr);
    const auto& v = tape.value(y);
    std::copy(v.values().begin(), v.values().end(),
              out.begin() + static_cast<std::ptrdiff_t>(first * out_w));
  }
  scaler_.inverse(out);
  return out;
}

std::vector<double> ForecastModel::forecast(std::span<const double> window) const {
  return forecast_batch(window, 1);
}

std::vector<ad::Parameter*> ForecastModel::parameters() {
  return nets::collect_parameters(lstm, head);
}

ForecastTrainResult train_forecaster(const SupervisedSet& set, const ForecasterConfig& config) {
  set.validate();
  if (set.kind != sampling::TargetKind::Forecast) {
    throw DataError("train_forecaster: set does not hold forecast targets");
  }
  if (set.n == 0) throw DataError("train_forecaster: empty training set");
  require_finite(set.inputs, "train_forecaster");
  require_finite(set.targets, "train_forecaster");
  check_common(config.epochs, config.batch_size, config.learning_rate, config.dropout,
               "forecaster config");

  Rng init_rng(derive_seed(config.seed, "forecaster.init"));
  Rng order_rng(derive_seed(config.seed, "forecaster.batches"));
  Rng drop_rng(derive_seed(config.seed, "forecaster.dropout"));

  ForecastTrainResult res;
  res.model = ForecastModel(config, set.W, set.H, set.F, MinMaxScaler::fit(set), init_rng);
  auto params = res.model.parameters();
  nets::AdamState state;
  state.config.learning_rate = config.learning_rate;

  const auto in_w = set.W * set.F;
  const auto out_w = set.H * set.F;
  const auto B = std::min(config.batch_size, set.n);
  std::vector<std::size_t> order(set.n);
  std::vector<std::size_t> idx;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t first = 0; first < set.n; first += B) {
      const auto count = std::min(B, set.n - first);
      idx.assign(order.begin() + static_cast<std::ptrdiff_t>(first),
                 order.begin() + static_cast<std::ptrdiff_t>(first + count));
      Tape tape;
      Var pred = res.model.forward(tape, scaled_rows(res.model.scaler(), set.inputs, idx, in_w),
                                   Mode::Train, &drop_rng);
      Var target = tape.constant(scaled_rows(res.model.scaler(), set.targets, idx, out_w));
      Var loss = nets::mse_loss(tape, pred, target);
      const double l = tape.value(loss).item();
      if (!std::isfinite(l)) {
        throw NumericalError("train_forecaster: non-finite loss at epoch " +
                             std::to_string(epoch + 1));
      }
      total += l * static_cast<double>(count);
      nets::adam_step(params, tape.param_grads(tape.backward(loss), params), state);
    }
    res.losses.push_back(total / static_cast<double>(set.n));
  }
  return res;
}

// ---------------------------------------------------------------------------
// L1 logistic regression

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double logistic_objective(std::span<const double> X, std::span<const double> y,
                          std::span<const double> beta, double intercept, double lambda) {
  const auto p = beta.size();
  const auto M = y.size();
  if (X.size() != M * p) throw DataError("logistic_objective: X is not M x p");
  double nll = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    double z = intercept;
    for (std::size_t j = 0; j < p; ++j) z += X[m * p + j] * beta[j];
    nll += log1pexp(z) - y[m] * z;
  }
  double l1 = 0.0;
  for (double b : beta) l1 += std::abs(b);
  return nll + lambda * l1;
}

ProxResult fit_logistic_l1(std::span<const double> X, std::size_t p, std::span<const double> y,
                           double lambda, const ProxOptions& options) {
  const auto M = y.size();
  if (M == 0 || p == 0 || X.size() != M * p) {
    throw DataError("fit_logistic_l1: X must be a non-empty M x p matrix");
  }
  if (!(lambda >= 0.0)) throw ConfigError("fit_logistic_l1: lambda must be >= 0");
  std::size_t positives = 0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw DataError("fit_logistic_l1: labels must be 0 or 1");
    positives += v == 1.0;
  }
  require_finite(X, "fit_logistic_l1");

  ProxResult res;
  res.beta.assign(p, 0.0);
  if (positives == 0 || positives == M) {
    const double k = static_cast<double>(positives);
    res.intercept = std::log((k + 0.5) / (static_cast<double>(M) - k + 0.5));
    res.single_class = true;
    res.converged = true;
    res.objective.push_back(logistic_objective(X, y, res.beta, res.intercept, lambda));
    return res;
  }

  // theta = [beta ; intercept]; only the first p coordinates are penalized.
  const auto q = p + 1;
  auto smooth = [&](std::span<const double> theta, std::span<double> grad) {
    double f = 0.0;
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t m = 0; m < M; ++m) {
      const auto row = X.subspan(m * p, p);
      double zm = theta[p];
      for (std::size_t j = 0; j < p; ++j) zm += row[j] * theta[j];
      f += log1pexp(zm) - y[m] * zm;
      if (grad.empty()) continue;
      const double r = sigmoid(zm) - y[m];
      for (std::size_t j = 0; j < p; ++j) grad[j] += r * row[j];
      grad[p] += r;
    }
    return f;
  };
  auto l1 = [&](std::span<const double> theta) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += std::abs(theta[j]);
    return s;
  };

  double frob = static_cast<double>(M);
  for (double v : X) frob += v * v;
  double step = 4.0 / frob;  // 1/L for L = |[X 1]|_F^2 / 4
  const double max_step = 1e6 * step;

  // Monotone FISTA with adaptive restart; the trial step grows each
  // iteration before backtracking.  z is accepted only if it does not raise
  // the objective.
  std::vector<double> x(q, 0.0), x_prev(q, 0.0), yk(q, 0.0), zk(q), grad(q);
  double obj = smooth(x, {}) + lambda * l1(x);
  res.objective.push_back(obj);
  double t = 1.0;

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const double fy = smooth(yk, grad);
    double fz = 0.0;
    step = std::min(1.25 * step, max_step);
    for (;;) {
      for (std::size_t j = 0; j < p; ++j) {
        zk[j] = soft_threshold(yk[j] - step * grad[j], step * lambda);
      }
      zk[p] = yk[p] - step * grad[p];
      fz = smooth(zk, {});
      double lin = 0.0, sq = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        const double d = zk[j] - yk[j];
        lin += grad[j] * d;
        sq += d * d;
      }
      if (fz <= fy + lin + sq / (2.0 * step) + 1e-12 * std::abs(fy)) break;
      step *= 0.5;
      if (step < 1e-300) throw NumericalError("fit_logistic_l1: line search failed");
    }

    const double z_obj = fz + lambda * l1(zk);
    const bool accept = z_obj <= obj;
    x_prev = x;
    const double prev_obj = obj;
    if (accept) {
      x = zk;
      obj = z_obj;
    }
    if (obj > prev_obj) throw NumericalError("fit_logistic_l1: objective increased");
    res.objective.push_back(obj);
    res.iterations = it + 1;

    // Momentum restarts when z was rejected or points against the step.
    double align = 0.0;
    for (std::size_t j = 0; j < q; ++j) align += (yk[j] - zk[j]) * (zk[j] - x_prev[j]);
    if (!accept || align > 0.0) {
      yk = x;
      t = 1.0;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      for (std::size_t j = 0; j < q; ++j) {
        yk[j] = x[j] + ((t - 1.0) / t_next) * (x[j] - x_prev[j]);
      }
      t = t_next;
    }
    if (accept && prev_obj - obj <= options.tolerance * std::abs(obj)) {
      res.converged = true;
      break;
    }
  }
  res.intercept = x[p];
  x.resize(p);
  res.beta = std::move(x);
  return res;
}

nlohmann::json to_json(const LogisticConfig& c) {
  nlohmann::json j = {{"lambda_grid", c.lambda_grid},
                      {"folds", c.folds},
                      {"standardize", c.standardize},
                      {"max_iterations", c.prox.max_iterations},
                      {"tolerance", c.prox.tolerance},
                      {"seed", c.seed}};
  j["lambda"] = c.lambda ? nlohmann::json(*c.lambda) : nlohmann::json(nullptr);
  return j;
}

LogisticConfig logistic_config_from_json(const nlohmann::json& j, const LogisticConfig& base) {
  LogisticConfig c = base;
  for_each_key(j, "logistic config", [&](const std::string& key, const nlohmann::json& v) {
    if (key == "lambda") {
      c.lambda = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    } else if (key == "lambda_grid") {
      c.lambda_grid = v.get<std::vector<double>>();
    } else if (key == "folds") {
      c.folds = get_size(v);
    } else if (key == "standardize") {
      c.standardize = v.get<bool>();
    } else if (key == "max_iterations") {
      c.prox.max_iterations = get_size(v);
    } else if (key == "tolerance") {
      c.prox.tolerance = v.get<double>();
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else {
      return false;
    }
    return true;
  });
  if (c.lambda && !(*c.lambda >= 0.0)) throw ConfigError("logistic config: lambda must be >= 0");
  if (!c.lambda && c.lambda_grid.empty()) throw ConfigError("logistic config: empty lambda_grid");
  for (double l : c.lambda_grid) {
    if (!(l >= 0.0)) throw ConfigError("logistic config: lambda_grid values must be >= 0");
  }
  if (c.folds < 2) throw ConfigError("logistic config: folds must be >= 2");
  return c;
}

namespace {

Standardizer fit_standardizer(std::span<const double> X, std::size_t M, std::size_t p) {
  Standardizer s;
  s.mean.assign(p, 0.0);
  s.sd.assign(p, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += X[m * p + j];
  }
  for (auto& v : s.mean) v /= static_cast<double>(M);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = X[m * p + j] - s.mean[j];
      s.sd[j] += d * d;
    }
  }
  for (auto& v : s.sd) {
    v = std::sqrt(v / static_cast<double>(M));
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

double mean_log_loss(std::span<const double> X, std::size_t p, std::span<const double> y,
                     const ProxResult& fit) {
  double total = 0.0;
  const auto M = y.size();
  for (std::size_t m = 0; m < M; ++m) {
    double z = fit.intercept;
    for (std::size_t j = 0; j < p; ++j) z += X[m * p + j] * fit.beta[j];
    total += log1pexp(z) - y[m] * z;
  }
  return total / static_cast<double>(M);
}

}  // namespace

LogisticModel train_logistic_l1(const SupervisedSet& set, const LogisticConfig& config) {
  set.validate();
  if (set.kind != sampling::TargetKind::Classification) {
    throw DataError("train_logistic_l1: set does not hold class labels");
  }
  if (set.n == 0) throw DataError("train_logistic_l1: empty training set");
  require_finite(set.inputs, "train_logistic_l1");

  const auto M = set.n;
  const auto p = set.W * set.F;
  LogisticModel model;
  model.W = set.W;
  model.F = set.F;
  std::vector<double> X = set.inputs;
  if (config.standardize) {
    model.standardizer = fit_standardizer(X, M, p);
  } else {
    model.standardizer.mean.assign(p, 0.0);
    model.standardizer.sd.assign(p, 1.0);
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t j = 0; j < p; ++j) {
      auto& v = X[m * p + j];
      v = (v - model.standardizer.mean[j]) / model.standardizer.sd[j];
    }
  }
  const std::span<const double> y(set.targets);

  double lambda = 0.0;
  if (config.lambda) {
    lambda = *config.lambda;
  } else if (config.lambda_grid.size() == 1) {
    lambda = config.lambda_grid.front();
  } else {
    const auto folds = std::min(config.folds, M);
    if (folds < 2) throw DataError("train_logistic_l1: too few samples for cross-validation");
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "logistic.cv"));
    rng.shuffle(order.begin(), order.end());

    model.cv_loss.assign(config.lambda_grid.size(), 0.0);
    std::vector<double> Xtr, ytr, Xte, yte;
    for (std::size_t k = 0; k < folds; ++k) {
      Xtr.clear();
      ytr.clear();
      Xte.clear();
      yte.clear();
      for (std::size_t r = 0; r < M; ++r) {
        const auto m = order[r];
        auto& xs = r % folds == k ? Xte : Xtr;
        auto& ys = r % folds == k ? yte : ytr;
        xs.insert(xs.end(), X.begin() + static_cast<std::ptrdiff_t>(m * p),
                  X.begin() + static_cast<std::ptrdiff_t>((m + 1) * p));
        ys.push_back(y[m]);
      }
      for (std::size_t g = 0; g < config.lambda_grid.size(); ++g) {
        const auto fit = fit_logistic_l1(Xtr, p, ytr, config.lambda_grid[g], config.prox);
        model.cv_loss[g] += mean_log_loss(Xte, p, yte, fit) / static_cast<double>(folds);
      }
    }
    // Ties go to the larger penalty.
    std::size_t best = 0;
    for (std::size_t g = 1; g < model.cv_loss.size(); ++g) {
      const bool better = model.cv_loss[g] < model.cv_loss[best] ||
                          (model.cv_loss[g] == model.cv_loss[best] &&
                           config.lambda_grid[g] > config.lambda_grid[best]);
      if (better) best = g;
    }
    lambda = config.lambda_grid[best];
  }

  auto fit = fit_logistic_l1(X, p, y, lambda, config.prox);
  model.beta = std::move(fit.beta);
  model.intercept = fit.intercept;
  model.lambda = lambda;
  model.single_class = fit.single_class;
  return model;
}

double logistic_predict(const LogisticModel& model, std::span<const double> window) {
  if (window.size() != model.beta.size()) {
    throw DataError("logistic_predict: window has " + std::to_string(window.size()) +
                    " values, model expects " + std::to_string(model.beta.size()));
  }
  double z = model.intercept;
  for (std::size_t j = 0; j < window.size(); ++j) {
    z += model.beta[j] * (window[j] - model.standardizer.mean[j]) / model.standardizer.sd[j];
  }
  return sigmoid(z);
}

// ---------------------------------------------------------------------------
// LSTM classifier

nlohmann::json to_json(const ClassifierConfig& c) {
  return {{"hidden", c.hidden},         {"dropout", c.dropout},
          {"dense", c.dense},           {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"seed", c.seed}};
}

ClassifierConfig classifier_config_from_json(const nlohmann::json& j, const ClassifierConfig& base) {
  ClassifierConfig c = base;
  for_each_key(j, "classifier config", [&](const std::string& key, const nlohmann::json& v) {
    if (key == "hidden") c.hidden = get_size(v);
    else if (key == "dropout") c.dropout = v.get<double>();
    else if (key == "dense") c.dense = get_size(v);
    else if (key == "epochs") c.epochs = get_size(v);
    else if (key == "batch_size") c.batch_size = get_size(v);
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  check_common(c.epochs, c.batch_size, c.learning_rate, c.dropout, "classifier config");
  if (c.hidden == 0 || c.dense == 0) throw ConfigError("classifier config: widths must be positive");
  return c;
}

ClassifierModel::ClassifierModel(const ClassifierConfig& config, std::size_t W, std::size_t F,
                                 MinMaxScaler scaler, Rng& rng)
    : lstm("classifier.lstm", F, {config.hidden}, rng),
      dense("classifier.dense", config.hidden, config.dense, nets::Activation::Tanh, rng),
      out("classifier.out", config.dense, 2, nets::Activation::Softmax, rng),
      config_(config),
      W_(W),
      F_(F),
      scaler_(std::move(scaler)) {
  if (W == 0 || F == 0) throw ConfigError("classifier: W and F must be positive");
}

Var ClassifierModel::forward(Tape& tape, const Tensor& scaled_inputs, Mode mode, Rng* rng) const {
  const auto seq = step_inputs(tape, scaled_inputs, W_, F_);
  Var h = lstm.forward_last(tape, seq);
  if (mode == Mode::Train && config_.dropout > 0.0) h = nets::dropout(tape, h, config_.dropout, mode, *rng);
  return out.forward(tape, dense.forward(tape, h));
}

std::vector<double> ClassifierModel::classify_batch(std::span<const double> windows,
                                                    std::size_t n) const {
  const auto in_w = W_ * F_;
  if (windows.size() != n * in_w) throw DataError("classify: window size mismatch");
  std::vector<double> out(n);
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < n; first += kEvalChunk) {
    const auto count = std::min(kEvalChunk, n - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    Tape tape;
    const auto probs = forward(tape, scaled_rows(scaler_, windows, idx, in_w), Mode::Eval, nullptr);
    const auto& v = tape.value(probs);
    for (std::size_t r = 0; r < count; ++r) out[first + r] = v.at(r, 1);
  }
  return out;
}

std::pair<double, double> ClassifierModel::probabilities(std::span<const double> window) const {
  const auto in_w = W_ * F_;
  if (window.size() != in_w) throw DataError("classify: window size mismatch");
  const std::size_t zero = 0;
  Tape tape;
  const auto probs = forward(tape, scaled_rows(scaler_, window, {&zero, 1}, in_w), Mode::Eval, nullptr);
  const auto& v = tape.value(probs);
  return {v.at(0, 0), v.at(0, 1)};
}

double ClassifierModel::classify(std::span<const double> window) const {
  return probabilities(window).second;
}

std::vector<ad::Parameter*> ClassifierModel::parameters() {
  return nets::collect_parameters(lstm, dense, out);
}

ClassifierTrainResult train_lstm_classifier(const SupervisedSet& set,
                                            const ClassifierConfig& config) {
  set.validate();
  if (set.kind != sampling::TargetKind::Classification) {
    throw DataError("train_lstm_classifier: set does not hold class labels");
  }
  if (set.n == 0) throw DataError("train_lstm_classifier: empty training set");
  require_finite(set.inputs, "train_lstm_classifier");
  for (double v : set.targets) {
    if (v != 0.0 && v != 1.0) throw DataError("train_lstm_classifier: labels must be 0 or 1");
  }
  check_common(config.epochs, config.batch_size, config.learning_rate, config.dropout,
               "classifier config");

  Rng init_rng(derive_seed(config.seed, "classifier.init"));
  Rng order_rng(derive_seed(config.seed, "classifier.batches"));
  Rng drop_rng(derive_seed(config.seed, "classifier.dropout"));

  ClassifierTrainResult res;
  res.model = ClassifierModel(config, set.W, set.F, MinMaxScaler::fit(set), init_rng);
  auto params = res.model.parameters();
  nets::AdamState state;
  state.config.learning_rate = config.learning_rate;

  const auto in_w = set.W * set.F;
  const auto B = std::min(config.batch_size, set.n);
  std::vector<std::size_t> order(set.n);
  std::vector<std::size_t> idx;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t first = 0; first < set.n; first += B) {
      const auto count = std::min(B, set.n - first);
      idx.assign(order.begin() + static_cast<std::ptrdiff_t>(first),
                 order.begin() + static_cast<std::ptrdiff_t>(first + count));
      Tensor onehot({count, 2});
      for (std::size_t r = 0; r < count; ++r) onehot.at(r, set.targets[idx[r]] == 1.0 ? 1 : 0) = 1.0;
      Tape tape;
      Var probs = res.model.forward(tape, scaled_rows(res.model.scaler(), set.inputs, idx, in_w),
                                    Mode::Train, &drop_rng);
      Var loss = nets::cross_entropy(tape, probs, tape.constant(std::move(onehot)));
      const double l = tape.value(loss).item();
      if (!std::isfinite(l)) {
        throw NumericalError("train_lstm_classifier: non-finite loss at epoch " +
                             std::to_string(epoch + 1));
      }
      total += l * static_cast<double>(count);
      nets::adam_step(params, tape.param_grads(tape.backward(loss), params), state);
    }
    res.losses.push_back(total / static_cast<double>(set.n));
  }

  const auto p = res.model.classify_batch(set.inputs, set.n);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.n; ++i) correct += (p[i] >= 0.5) == (set.targets[i] == 1.0);
  res.train_accuracy = static_cast<double>(correct) / static_cast<double>(set.n);
  return res;
}

}  // namespace ygan::downstream
