// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/dgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "yieldgan/ingest.hpp"

namespace ygan::dgan {

using nets::Mode;

// ---------------------------------------------------------------------------
// Normalization

std::pair<SampleSet, Normalizer> normalize_samples(const SampleSet& set, double eps) {
  if (set.n == 0) throw DataError("normalize_samples: empty set");
  Normalizer norm;
  norm.n = set.n;
  norm.F = set.F;
  norm.eps = eps;
  norm.mid.resize(set.n * set.F);
  norm.half.resize(set.n * set.F);

  SampleSet out = set;
  const auto A0 = set.num_attributes();
  for (std::size_t f = 0; f < set.F; ++f) {
    const auto name = set.feature_names.size() == set.F ? set.feature_names[f]
                                                        : "x" + std::to_string(f);
    out.attribute_schema.push_back("mid_" + name);
  }
  for (std::size_t f = 0; f < set.F; ++f) {
    const auto name = set.feature_names.size() == set.F ? set.feature_names[f]
                                                        : "x" + std::to_string(f);
    out.attribute_schema.push_back("half_" + name);
  }
  const auto A1 = out.num_attributes();
  out.attributes.assign(set.n * A1, 0.0);

  for (std::size_t i = 0; i < set.n; ++i) {
    for (std::size_t a = 0; a < A0; ++a) out.attributes[i * A1 + a] = set.attribute(i, a);
    for (std::size_t f = 0; f < set.F; ++f) {
      double lo = set.feature(i, 0, f), hi = lo;
      for (std::size_t t = 1; t < set.T; ++t) {
        lo = std::min(lo, set.feature(i, t, f));
        hi = std::max(hi, set.feature(i, t, f));
      }
      const double mid = 0.5 * (lo + hi);
      const double half = 0.5 * (hi - lo);
      norm.mid[i * set.F + f] = mid;
      norm.half[i * set.F + f] = half;
      const double denom = std::max(half, eps);
      for (std::size_t t = 0; t < set.T; ++t) {
        const auto k = (i * set.T + t) * set.F + f;
        out.features[k] = std::clamp((set.features[k] - mid) / denom, -1.0, 1.0);
      }
      out.attributes[i * A1 + A0 + f] = mid;
      out.attributes[i * A1 + A0 + set.F + f] = half;
    }
  }
  return {std::move(out), std::move(norm)};
}

std::vector<double> denormalize(std::span<const double> sample, std::span<const double> mid,
                                std::span<const double> half) {
  const auto F = mid.size();
  if (half.size() != F || F == 0 || sample.size() % F != 0) {
    throw DataError("denormalize: metadata does not match the sample");
  }
  for (std::size_t f = 0; f < F; ++f) {
    if (!std::isfinite(mid[f]) || !std::isfinite(half[f])) {
      throw DataError("denormalize: non-finite metadata");
    }
    if (half[f] < 0.0) throw DataError("denormalize: negative half-range");
  }
  std::vector<double> out(sample.size());
  for (std::size_t k = 0; k < sample.size(); ++k) {
    out[k] = sample[k] * half[k % F] + mid[k % F];
  }
  return out;
}

MetaScale MetaScale::fit(const Normalizer& norm) {
  MetaScale s;
  for (std::size_t f = 0; f < norm.F; ++f) {
    double lo = norm.mid[f], hi = lo, top = 0.0;
    for (std::size_t i = 0; i < norm.n; ++i) {
      lo = std::min(lo, norm.mid[i * norm.F + f]);
      hi = std::max(hi, norm.mid[i * norm.F + f]);
      top = std::max(top, norm.half[i * norm.F + f]);
    }
    s.mid_center.push_back(0.5 * (lo + hi));
    s.mid_spread.push_back(std::max(0.5 * (hi - lo), kHalfRangeFloor));
    s.half_top.push_back(std::max(top, kHalfRangeFloor));
  }
  return s;
}

double MetaScale::scale_mid(std::size_t f, double mid) const {
  return (mid - mid_center[f]) / mid_spread[f];
}
double MetaScale::unscale_mid(std::size_t f, double scaled) const {
  return mid_center[f] + mid_spread[f] * scaled;
}
double MetaScale::scale_half(std::size_t f, double half) const { return half / half_top[f]; }
double MetaScale::unscale_half(std::size_t f, double scaled) const {
  return scaled * half_top[f];
}

// ---------------------------------------------------------------------------
// Configuration

void DGanConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("dgan config: " + msg); };
  if (T == 0 || S == 0) fail("T and S must be positive");
  if (T % S != 0) fail("T=" + std::to_string(T) + " is not divisible by S=" + std::to_string(S));
  if (attr_latent == 0 || meta_latent == 0 || seq_latent == 0) fail("latent dims must be positive");
  if (lstm_hidden.empty()) fail("lstm_hidden must have at least one layer");
  for (const auto* v : {&attr_hidden, &meta_hidden, &lstm_hidden, &critic_hidden, &aux_hidden}) {
    for (auto w : *v) {
      if (w == 0) fail("layer widths must be positive");
    }
  }
  if (!(critic_dropout >= 0.0 && critic_dropout < 1.0) || !(aux_dropout >= 0.0 && aux_dropout < 1.0)) {
    fail("dropout rates must be in [0, 1)");
  }
  if (!(alpha >= 0.0)) fail("alpha must be >= 0");
  if (!(attr_temperature > 0.0)) fail("attr_temperature must be positive");
  if (critic_steps < 1) fail("critic_steps (k) must be >= 1");
  if (!(generator_lr > 0.0) || !(critic_lr > 0.0)) fail("learning rates must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail("Adam betas must be in [0, 1)");
  }
  if (epochs == 0) fail("epochs must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(gp_lambda >= 0.0)) fail("gp_lambda must be >= 0");
  if (!(clip_value > 0.0)) fail("clip_value must be positive");
}

nlohmann::json to_json(const DGanConfig& c) {
  return {
      {"T", c.T},
      {"S", c.S},
      {"attr_latent", c.attr_latent},
      {"meta_latent", c.meta_latent},
      {"seq_latent", c.seq_latent},
      {"attr_hidden", c.attr_hidden},
      {"meta_hidden", c.meta_hidden},
      {"lstm_hidden", c.lstm_hidden},
      {"critic_hidden", c.critic_hidden},
      {"aux_hidden", c.aux_hidden},
      {"critic_dropout", c.critic_dropout},
      {"aux_dropout", c.aux_dropout},
      {"alpha", c.alpha},
      {"attr_temperature", c.attr_temperature},
      {"critic_steps", c.critic_steps},
      {"generator_lr", c.generator_lr},
      {"critic_lr", c.critic_lr},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"max_iterations", c.max_iterations},
      {"gradient_penalty", c.gradient_penalty},
      {"gp_lambda", c.gp_lambda},
      {"gp_one_sided", c.gp_one_sided},
      {"clip_value", c.clip_value},
      {"diversity_probe", c.diversity_probe},
      {"seed", c.seed},
  };
}

DGanConfig dgan_config_from_json(const nlohmann::json& j, const DGanConfig& base) {
  if (!j.is_object()) throw ConfigError("dgan config must be a JSON object");
  DGanConfig c = base;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "T") c.T = v.get<std::size_t>();
      else if (key == "S") c.S = v.get<std::size_t>();
      else if (key == "attr_latent") c.attr_latent = v.get<std::size_t>();
      else if (key == "meta_latent") c.meta_latent = v.get<std::size_t>();
      else if (key == "seq_latent") c.seq_latent = v.get<std::size_t>();
      else if (key == "attr_hidden") c.attr_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "meta_hidden") c.meta_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "lstm_hidden") c.lstm_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "critic_hidden") c.critic_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "aux_hidden") c.aux_hidden = v.get<std::vector<std::size_t>>();
      else if (key == "critic_dropout") c.critic_dropout = v.get<double>();
      else if (key == "aux_dropout") c.aux_dropout = v.get<double>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "attr_temperature") c.attr_temperature = v.get<double>();
      else if (key == "critic_steps" || key == "k") c.critic_steps = v.get<std::size_t>();
      else if (key == "generator_lr") c.generator_lr = v.get<double>();
      else if (key == "critic_lr") c.critic_lr = v.get<double>();
      else if (key == "adam_beta1") c.adam_beta1 = v.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "max_iterations") c.max_iterations = v.get<std::size_t>();
      else if (key == "gradient_penalty") c.gradient_penalty = v.get<bool>();
      else if (key == "gp_lambda") c.gp_lambda = v.get<double>();
      else if (key == "gp_one_sided") c.gp_one_sided = v.get<bool>();
      else if (key == "clip_value") c.clip_value = v.get<double>();
      else if (key == "diversity_probe") c.diversity_probe = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw ConfigError("dgan config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("dgan config: bad value for '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Models

GeneratorBundle::GeneratorBundle(const DGanConfig& config,
                                 std::vector<std::string> attribute_names,
                                 std::vector<std::string> feature_names, MetaScale scale,
                                 Rng& rng)
    : config_(config),
      attribute_names_(std::move(attribute_names)),
      feature_names_(std::move(feature_names)),
      scale_(std::move(scale)) {
  config_.validate();
  const auto A = attribute_names_.size();
  const auto F = feature_names_.size();
  if (A == 0) throw ConfigError("dgan: at least one attribute is required");
  if (F == 0) throw ConfigError("dgan: at least one feature is required");
  if (scale_.mid_center.size() != F) throw ConfigError("dgan: metadata scale has wrong width");
  attr_gen = nets::Mlp("gen.attr", config_.attr_latent, config_.attr_hidden, A,
                       nets::Activation::Identity, 0.0, rng);
  meta_gen = nets::Mlp("gen.meta", A + config_.meta_latent, config_.meta_hidden, 2 * F,
                       nets::Activation::Identity, 0.0, rng);
  seq_gen = nets::LstmStack("gen.seq", A + 2 * F + config_.seq_latent, config_.lstm_hidden, rng);
  head = nets::Dense("gen.head", config_.lstm_hidden.back(), config_.S * F,
                     nets::Activation::Tanh, rng);
}

std::vector<ad::Parameter*> GeneratorBundle::parameters() {
  return nets::collect_parameters(attr_gen, meta_gen, seq_gen, head);
}

Critics::Critics(const DGanConfig& config, std::size_t A, std::size_t F, Rng& rng)
    : primary("critic", A + 2 * F + config.T * F, config.critic_hidden, 1,
              nets::Activation::Identity, config.critic_dropout, rng),
      aux("critic_aux", A, config.aux_hidden, 1, nets::Activation::Identity,
          config.aux_dropout, rng),
      alpha(config.alpha) {}

std::vector<ad::Parameter*> Critics::parameters() {
  return nets::collect_parameters(primary, aux);
}

namespace {

Tensor normal_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

double logistic_draw(Rng& rng) {
  double u = rng.uniform();
  while (u == 0.0) u = rng.uniform();
  return std::log(u) - std::log1p(-u);
}

Tensor logistic_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = logistic_draw(rng);
  return t;
}

}  // namespace

Noise sample_noise(const GeneratorBundle& g, std::size_t batch, Rng& rng) {
  const auto& c = g.config();
  Noise z;
  z.za = normal_tensor(batch, c.attr_latent, rng);
  z.zm = normal_tensor(batch, c.meta_latent, rng);
  z.logistic = logistic_tensor(batch, g.num_attributes(), rng);
  for (std::size_t p = 0; p < c.passes(); ++p) z.zt.push_back(normal_tensor(batch, c.seq_latent, rng));
  return z;
}

Noise sample_noise_per_sample(const GeneratorBundle& g, std::uint64_t seed, std::size_t first,
                              std::size_t count) {
  const auto& c = g.config();
  Noise z;
  z.za = Tensor({count, c.attr_latent});
  z.zm = Tensor({count, c.meta_latent});
  z.logistic = Tensor({count, g.num_attributes()});
  for (std::size_t p = 0; p < c.passes(); ++p) z.zt.emplace_back(ad::Shape{count, c.seq_latent});
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(first + i)));
    for (std::size_t q = 0; q < c.attr_latent; ++q) z.za.at(i, q) = rng.normal();
    for (std::size_t q = 0; q < c.meta_latent; ++q) z.zm.at(i, q) = rng.normal();
    for (std::size_t q = 0; q < g.num_attributes(); ++q) z.logistic.at(i, q) = logistic_draw(rng);
    for (auto& zt : z.zt) {
      for (std::size_t q = 0; q < c.seq_latent; ++q) zt.at(i, q) = rng.normal();
    }
  }
  return z;
}

FakeBatch generator_forward(ad::Tape& tape, const GeneratorBundle& g, const Noise& noise) {
  const auto& c = g.config();
  const auto F = g.num_features();
  if (noise.zt.size() != c.passes()) throw ConfigError("generator: wrong number of pass noises");
  FakeBatch out;
  Var logits = g.attr_gen.forward(tape, tape.constant(noise.za), Mode::Eval, nullptr);
  out.attrs = tape.sigmoid(tape.scale(tape.add(logits, tape.constant(noise.logistic)),
                                      1.0 / c.attr_temperature));
  Var raw = g.meta_gen.forward(tape, tape.concat({out.attrs, tape.constant(noise.zm)}),
                               Mode::Eval, nullptr);
  Var mid = tape.tanh(tape.slice(raw, 0, F));
  Var half = tape.softplus(tape.slice(raw, F, 2 * F));
  out.meta = tape.concat({mid, half});

  std::vector<Var> seq;
  seq.reserve(c.passes());
  for (const auto& zt : noise.zt) {
    seq.push_back(tape.concat({out.attrs, out.meta, tape.constant(zt)}));
  }
  const auto hs = g.seq_gen.forward(tape, seq);
  std::vector<Var> steps;
  steps.reserve(hs.size());
  for (Var h : hs) steps.push_back(g.head.forward(tape, h));
  out.series = tape.concat(steps);
  return out;
}

Var primary_input(ad::Tape& tape, Var attrs, Var meta, Var series) {
  return tape.concat({attrs, meta, series});
}

Var aux_input(ad::Tape& tape, Var attrs) { return tape.concat({attrs}); }

namespace {

// lambda * mean_i (|d critic / d x_i| - 1)^2 at x = u*real + (1-u)*fake,
// evaluated without dropout.  The one-sided form penalizes only norms above 1.
Var gradient_penalty(ad::Tape& tape, const nets::Mlp& critic, Var real, Var fake,
                     double lambda, bool one_sided, Rng& rng) {
  const Tensor& r = tape.value(real);
  const Tensor& f = tape.value(fake);
  const auto rows = r.dim(0), cols = r.dim(1);
  Tensor mix({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    const double u = rng.uniform();
    for (std::size_t j = 0; j < cols; ++j) mix.at(i, j) = u * r.at(i, j) + (1.0 - u) * f.at(i, j);
  }
  const auto tr = critic.trace(tape, tape.constant(std::move(mix)), Mode::Eval, nullptr);
  Var g = critic.input_gradient(tape, tr);
  Var norm = tape.sqrt(tape.shift(tape.row_sum(tape.square(g)), 1e-12));
  Var excess = tape.shift(norm, -1.0);
  if (one_sided) excess = tape.relu(excess);
  return tape.scale(tape.mean(tape.square(excess)), lambda);
}

Var wasserstein_gap(ad::Tape& tape, const nets::Mlp& critic, Var real, Var fake, Mode mode,
                    Rng& rng) {
  Var sr = critic.forward(tape, real, mode, &rng);
  Var sf = critic.forward(tape, fake, mode, &rng);
  return tape.sub(tape.mean(sf), tape.mean(sr));
}

}  // namespace

CriticLosses critic_losses(ad::Tape& tape, const Critics& critics, CriticBatch real,
                           CriticBatch fake, const PenaltyConfig& penalty, Mode mode,
                           Rng& rng) {
  if (tape.shape(real.primary) != tape.shape(fake.primary) ||
      tape.shape(real.aux) != tape.shape(fake.aux)) {
    throw ConfigError("critic_losses: real and fake batch shapes differ");
  }
  CriticLosses out;
  out.primary = wasserstein_gap(tape, critics.primary, real.primary, fake.primary, mode, rng);
  out.aux = wasserstein_gap(tape, critics.aux, real.aux, fake.aux, mode, rng);
  if (penalty.enabled && penalty.lambda > 0.0) {
    out.primary = tape.add(out.primary,
                           gradient_penalty(tape, critics.primary, real.primary, fake.primary,
                                            penalty.lambda, penalty.one_sided, rng));
    out.aux = tape.add(out.aux, gradient_penalty(tape, critics.aux, real.aux, fake.aux,
                                                 penalty.lambda, penalty.one_sided, rng));
  }
  out.combined = tape.add(out.primary, tape.scale(out.aux, critics.alpha));
  return out;
}

Var generator_loss(ad::Tape& tape, const Critics& critics, CriticBatch fake, Mode mode,
                   Rng& rng) {
  Var score = tape.mean(critics.primary.forward(tape, fake.primary, mode, &rng));
  if (critics.alpha != 0.0) {
    Var aux = tape.mean(critics.aux.forward(tape, fake.aux, mode, &rng));
    score = tape.add(score, tape.scale(aux, critics.alpha));
  }
  return tape.scale(score, -1.0);
}

// ---------------------------------------------------------------------------
// Training

TrainingData prepare_training_data(const SampleSet& set, double eps) {
  set.validate();
  if (set.n == 0) throw DataError("dgan: empty training set");
  if (set.num_attributes() == 0) throw DataError("dgan: training set has no attributes");
  for (double v : set.attributes) {
    if (v != 0.0 && v != 1.0) throw DataError("dgan: attributes must be binary indicators");
  }
  const auto [normed, norm] = normalize_samples(set, eps);
  TrainingData td;
  td.n = set.n;
  td.A = set.num_attributes();
  td.F = set.F;
  td.T = set.T;
  td.scale = MetaScale::fit(norm);
  td.attrs = set.attributes;
  td.series = normed.features;
  td.meta.resize(set.n * 2 * set.F);
  for (std::size_t i = 0; i < set.n; ++i) {
    for (std::size_t f = 0; f < set.F; ++f) {
      td.meta[i * 2 * set.F + f] = td.scale.scale_mid(f, norm.mid[i * set.F + f]);
      td.meta[i * 2 * set.F + set.F + f] = td.scale.scale_half(f, norm.half[i * set.F + f]);
    }
  }
  return td;
}

std::string history_to_csv(const History& h) {
  std::string out = "epoch,critic_loss,aux_loss,gen_loss,diversity\n";
  for (const auto& r : h) {
    out += std::to_string(r.epoch) + "," + ingest::format_double(r.critic_loss) + "," +
           ingest::format_double(r.aux_loss) + "," + ingest::format_double(r.gen_loss) + "," +
           ingest::format_double(r.diversity) + "\n";
  }
  return out;
}

namespace {

Tensor gather_rows(const std::vector<double>& src, std::size_t width,
                   std::span<const std::size_t> idx) {
  Tensor t({idx.size(), width});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(idx[r] * width), width,
                t.values().begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return t;
}

double probe_diversity(const GeneratorBundle& g, std::uint64_t seed, std::size_t n) {
  if (n < 2) return 0.0;
  const auto gen = generate_detailed(g, n, seed);
  return metrics::diversity_score(gen.normalized, n, g.config().T * g.num_features());
}

}  // namespace

TrainResult train_dgan(const DGanConfig& config, const SampleSet& data) {
  config.validate();
  if (data.T != config.T) {
    throw ConfigError("dgan: data has T=" + std::to_string(data.T) + " but config T=" +
                      std::to_string(config.T));
  }
  const auto td = prepare_training_data(data);
  const auto seed = config.seed;

  Rng init_rng(derive_seed(seed, "dgan.init"));
  TrainResult res;
  res.bundle = GeneratorBundle(config, data.attribute_schema,
                               data.feature_names.size() == data.F
                                   ? data.feature_names
                                   : std::vector<std::string>(data.F, "x"),
                               td.scale, init_rng);
  res.critics = Critics(config, td.A, td.F, init_rng);

  Rng batch_rng(derive_seed(seed, "dgan.batches"));
  Rng noise_rng(derive_seed(seed, "dgan.noise"));
  Rng critic_rng(derive_seed(seed, "dgan.critic"));
  const auto probe_seed = derive_seed(seed, "dgan.probe");

  nets::AdamState g_state, d_state;
  g_state.config = {config.generator_lr, config.adam_beta1, config.adam_beta2, 1e-8};
  d_state.config = {config.critic_lr, config.adam_beta1, config.adam_beta2, 1e-8};
  auto gparams = res.bundle.parameters();
  auto dparams = res.critics.parameters();

  const auto B = std::min(config.batch_size, td.n);
  const auto batches = td.n / B;
  const auto meta_w = 2 * td.F;
  const auto series_w = td.T * td.F;
  std::vector<std::size_t> order(td.n);
  std::vector<std::size_t> idx(B);

  auto abort = [&](const std::string& what) {
    throw TrainingAborted("dgan: " + what + " at epoch " + std::to_string(res.history.size() + 1),
                          res.history);
  };
  auto finite_or_abort = [&](double v, const char* what) {
    if (!std::isfinite(v)) abort(std::string("non-finite ") + what);
    return v;
  };

  bool stop = false;
  for (std::size_t epoch = 1; epoch <= config.epochs && !stop; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    batch_rng.shuffle(order.begin(), order.end());
    double sum_c = 0.0, sum_a = 0.0, sum_g = 0.0;
    std::size_t steps_c = 0, steps_g = 0;

    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t j = 0; j < config.critic_steps; ++j) {
        for (std::size_t r = 0; r < B; ++r) {
          idx[r] = j == 0 ? order[b * B + r] : static_cast<std::size_t>(batch_rng.below(td.n));
        }
        // Fake batch, detached from the generator.
        ad::Tape gt;
        const auto fake = generator_forward(gt, res.bundle, sample_noise(res.bundle, B, noise_rng));

        ad::Tape tape;
        Var ra = tape.constant(gather_rows(td.attrs, td.A, idx));
        Var rm = tape.constant(gather_rows(td.meta, meta_w, idx));
        Var rs = tape.constant(gather_rows(td.series, series_w, idx));
        Var fa = tape.constant(gt.value(fake.attrs));
        Var fm = tape.constant(gt.value(fake.meta));
        Var fs = tape.constant(gt.value(fake.series));
        const CriticBatch real{primary_input(tape, ra, rm, rs), aux_input(tape, ra)};
        const CriticBatch fk{primary_input(tape, fa, fm, fs), aux_input(tape, fa)};
        const auto losses =
            critic_losses(tape, res.critics, real, fk,
                          {config.gradient_penalty, config.gp_lambda, config.gp_one_sided},
                          Mode::Train, critic_rng);
        sum_c += finite_or_abort(tape.value(losses.primary).item(), "critic loss");
        sum_a += finite_or_abort(tape.value(losses.aux).item(), "auxiliary critic loss");
        finite_or_abort(tape.value(losses.combined).item(), "combined critic loss");
        ++steps_c;
        const auto grads = tape.backward(losses.combined);
        try {
          nets::adam_step(dparams, tape.param_grads(grads, dparams), d_state);
        } catch (const NumericalError& e) {
          abort(e.what());
        }
        if (!config.gradient_penalty) nets::clip_parameters(dparams, config.clip_value);
      }

      ad::Tape tape;
      const auto fake = generator_forward(tape, res.bundle, sample_noise(res.bundle, B, noise_rng));
      const CriticBatch fk{primary_input(tape, fake.attrs, fake.meta, fake.series),
                           aux_input(tape, fake.attrs)};
      Var loss = generator_loss(tape, res.critics, fk, Mode::Train, critic_rng);
      sum_g += finite_or_abort(tape.value(loss).item(), "generator loss");
      ++steps_g;
      const auto grads = tape.backward(loss);
      try {
        nets::adam_step(gparams, tape.param_grads(grads, gparams), g_state);
      } catch (const NumericalError& e) {
        abort(e.what());
      }

      ++res.iterations;
      if (config.max_iterations != 0 && res.iterations >= config.max_iterations) {
        stop = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.critic_loss = sum_c / static_cast<double>(std::max<std::size_t>(steps_c, 1));
    rec.aux_loss = sum_a / static_cast<double>(std::max<std::size_t>(steps_c, 1));
    rec.gen_loss = sum_g / static_cast<double>(std::max<std::size_t>(steps_g, 1));
    rec.diversity = probe_diversity(res.bundle, probe_seed, config.diversity_probe);
    res.history.push_back(rec);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Generation

Generated generate_detailed(const GeneratorBundle& g, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("generate: n must be positive");
  const auto& c = g.config();
  const auto A = g.num_attributes();
  const auto F = g.num_features();
  const auto TF = c.T * F;

  Generated out;
  auto& s = out.samples;
  s.n = n;
  s.T = c.T;
  s.F = F;
  s.feature_names = g.feature_names();
  s.attribute_schema = g.attribute_names();
  s.provenance = sampling::Provenance::Synthetic;
  s.features.resize(n * TF);
  s.attributes.resize(n * A);
  out.normalized.resize(n * TF);
  out.mid.resize(n * F);
  out.half.resize(n * F);

  constexpr std::size_t kChunk = 256;
  for (std::size_t first = 0; first < n; first += kChunk) {
    const auto count = std::min(kChunk, n - first);
    ad::Tape tape;
    const auto fake = generator_forward(tape, g, sample_noise_per_sample(g, seed, first, count));
    const Tensor& attrs = tape.value(fake.attrs);
    const Tensor& meta = tape.value(fake.meta);
    const Tensor& series = tape.value(fake.series);
    for (std::size_t r = 0; r < count; ++r) {
      const auto i = first + r;
      for (std::size_t a = 0; a < A; ++a) {
        s.attributes[i * A + a] = attrs.at(r, a) >= 0.5 ? 1.0 : 0.0;
      }
      for (std::size_t f = 0; f < F; ++f) {
        out.mid[i * F + f] = g.meta_scale().unscale_mid(f, meta.at(r, f));
        out.half[i * F + f] = g.meta_scale().unscale_half(f, meta.at(r, F + f));
      }
      const std::span<const double> norm(series.values().data() + r * TF, TF);
      std::copy(norm.begin(), norm.end(), out.normalized.begin() + static_cast<std::ptrdiff_t>(i * TF));
      const auto x = denormalize(norm, std::span<const double>(out.mid).subspan(i * F, F),
                                 std::span<const double>(out.half).subspan(i * F, F));
      std::copy(x.begin(), x.end(), s.features.begin() + static_cast<std::ptrdiff_t>(i * TF));
    }
  }
  return out;
}

SampleSet generate(const GeneratorBundle& g, std::size_t n, std::uint64_t seed) {
  return generate_detailed(g, n, seed).samples;
}

}  // namespace ygan::dgan
