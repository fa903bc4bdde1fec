// SPDX-License-Identifier: Apache-2.0
//
// DoppelGANger-style generator and critics.
//
// Generation runs in three stages.  An attribute MLP maps latent noise to
// logits of binary indicator attributes.  The attribute value is the relaxed
// Bernoulli sample sigmoid((logit + L) / tau) with logistic noise L, so
// thresholding it at 0.5 on output draws exactly Bernoulli(sigmoid(logit)).  A
// min/max MLP maps [attributes ; noise] to each feature's normalization
// metadata: the midpoint through tanh and the half-range through softplus.
// An LSTM then runs T/S passes; pass p consumes [attributes ; metadata ;
// noise_p] and a tanh head emits S steps of F normalized features.  The
// series is denormalized by the generated metadata.
//
// Midpoints and half-ranges are kept in a dataset-wide scaled form
// (MetaScale) so that the generator's tanh/softplus outputs cover the data.
//
// Training is Wasserstein with gradient penalty on a primary critic over
// [attributes ; metadata ; series] and an auxiliary critic over the
// attributes alone, combined as primary + alpha * auxiliary.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "yieldgan/error.hpp"
#include "yieldgan/metrics.hpp"
#include "yieldgan/nets.hpp"
#include "yieldgan/sampling.hpp"

namespace ygan::dgan {

using ad::Tensor;
using ad::Var;
using metrics::diversity_score;
using sampling::SampleSet;

// ---------------------------------------------------------------------------
// Per-sample min/max normalization

inline constexpr double kHalfRangeFloor = 1e-8;

/// mid/half are n x F, row-major.
struct Normalizer {
  std::size_t n = 0;
  std::size_t F = 0;
  std::vector<double> mid;
  std::vector<double> half;
  double eps = kHalfRangeFloor;
};

/// Maps each sample/feature to (x - mid) / max(half, eps) and appends
/// mid_<feature> and half_<feature> attributes.
std::pair<SampleSet, Normalizer> normalize_samples(const SampleSet& set,
                                                   double eps = kHalfRangeFloor);

/// x * half + mid for one T x F sample; mid/half have F entries.
std::vector<double> denormalize(std::span<const double> sample, std::span<const double> mid,
                                std::span<const double> half);

/// Dataset-wide affine map of the metadata: scaled midpoint
/// (mid - center) / spread lies in [-1, 1]; scaled half-range half / top
/// lies in [0, 1].
struct MetaScale {
  std::vector<double> mid_center;
  std::vector<double> mid_spread;
  std::vector<double> half_top;

  static MetaScale fit(const Normalizer& norm);
  double scale_mid(std::size_t f, double mid) const;
  double unscale_mid(std::size_t f, double scaled) const;
  double scale_half(std::size_t f, double half) const;
  double unscale_half(std::size_t f, double scaled) const;
  bool operator==(const MetaScale&) const = default;
};

// ---------------------------------------------------------------------------
// Configuration

struct DGanConfig {
  std::size_t T = 125;
  std::size_t S = 5;
  std::size_t attr_latent = 8;
  std::size_t meta_latent = 8;
  std::size_t seq_latent = 8;
  std::vector<std::size_t> attr_hidden{64, 64};
  std::vector<std::size_t> meta_hidden{64, 64};
  std::vector<std::size_t> lstm_hidden{128};
  std::vector<std::size_t> critic_hidden{128, 128, 128};
  std::vector<std::size_t> aux_hidden{64, 64};
  double critic_dropout = 0.3;
  double aux_dropout = 0.3;
  double alpha = 1.0;
  double attr_temperature = 0.2;
  std::size_t critic_steps = 1;  // k
  double generator_lr = 1e-4;
  double critic_lr = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  std::size_t epochs = 2000;
  std::size_t batch_size = 100;
  std::size_t max_iterations = 0;  // 0: no cap beyond epochs
  bool gradient_penalty = true;
  double gp_lambda = 10.0;
  bool gp_one_sided = true;
  double clip_value = 0.01;
  std::size_t diversity_probe = 32;
  std::uint64_t seed = 0;

  /// Throws ConfigError on a violated invariant.
  void validate() const;
  std::size_t passes() const { return T / S; }
};

nlohmann::json to_json(const DGanConfig& c);
/// Starts from `base` and overrides the keys present; unknown keys throw.
DGanConfig dgan_config_from_json(const nlohmann::json& j, const DGanConfig& base = {});

// ---------------------------------------------------------------------------
// Models

class GeneratorBundle {
 public:
  GeneratorBundle() = default;
  GeneratorBundle(const DGanConfig& config, std::vector<std::string> attribute_names,
                  std::vector<std::string> feature_names, MetaScale scale, Rng& rng);

  std::size_t num_attributes() const { return attribute_names_.size(); }
  std::size_t num_features() const { return feature_names_.size(); }
  const DGanConfig& config() const { return config_; }
  const MetaScale& meta_scale() const { return scale_; }
  const std::vector<std::string>& attribute_names() const { return attribute_names_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::vector<ad::Parameter*> parameters();

  nets::Mlp attr_gen;
  nets::Mlp meta_gen;
  nets::LstmStack seq_gen;
  nets::Dense head;

 private:
  DGanConfig config_;
  std::vector<std::string> attribute_names_;
  std::vector<std::string> feature_names_;
  MetaScale scale_;
};

struct Critics {
  Critics() = default;
  Critics(const DGanConfig& config, std::size_t A, std::size_t F, Rng& rng);
  std::vector<ad::Parameter*> parameters();

  nets::Mlp primary;  // [attrs ; meta ; series] -> score
  nets::Mlp aux;      // attrs -> score
  double alpha = 1.0;
};

/// Latent draws for a batch: za (B x attr_latent), logistic (B x A), zm
/// (B x meta_latent) and one B x seq_latent tensor per pass.
struct Noise {
  Tensor za;
  Tensor logistic;
  Tensor zm;
  std::vector<Tensor> zt;
};

Noise sample_noise(const GeneratorBundle& g, std::size_t batch, Rng& rng);
/// Sample i draws from its own stream derive_seed(seed, first + i), so a
/// sample's noise does not depend on how samples are batched.
Noise sample_noise_per_sample(const GeneratorBundle& g, std::uint64_t seed, std::size_t first,
                              std::size_t count);

/// Generator outputs on a tape.  attrs are relaxed indicators (B x A), meta is
/// [scaled mid | scaled half] (B x 2F), series the normalized B x (T*F).
struct FakeBatch {
  Var attrs;
  Var meta;
  Var series;
};

FakeBatch generator_forward(ad::Tape& tape, const GeneratorBundle& g, const Noise& noise);

/// Critic inputs: [attrs ; meta ; series] for the primary critic and the
/// attributes alone for the auxiliary critic.
Var primary_input(ad::Tape& tape, Var attrs, Var meta, Var series);
Var aux_input(ad::Tape& tape, Var attrs);

struct CriticLosses {
  Var primary;
  Var aux;
  Var combined;
};

struct CriticBatch {
  Var primary;  // B x (A + 2F + T*F)
  Var aux;      // B x A
};

struct PenaltyConfig {
  bool enabled = true;
  double lambda = 10.0;
  bool one_sided = true;
};

/// mean D(fake) - mean D(real) per critic, plus lambda * mean (|grad| - 1)^2
/// on random interpolates (dropout off) when the penalty is enabled; the
/// one-sided form only penalizes norms above 1.  combined = primary +
/// alpha * aux.  Inputs should be constants (detached).
CriticLosses critic_losses(ad::Tape& tape, const Critics& critics, CriticBatch real,
                           CriticBatch fake, const PenaltyConfig& penalty, nets::Mode mode,
                           Rng& rng);

/// -(mean D(fake) + alpha * mean D_aux(fake)).
Var generator_loss(ad::Tape& tape, const Critics& critics, CriticBatch fake, nets::Mode mode,
                   Rng& rng);

// ---------------------------------------------------------------------------
// Training and generation

/// GAN-ready view of a sample set.
struct TrainingData {
  std::size_t n = 0;
  std::size_t A = 0;
  std::size_t F = 0;
  std::size_t T = 0;
  std::vector<double> attrs;   // n x A
  std::vector<double> meta;    // n x 2F, scaled
  std::vector<double> series;  // n x T*F, normalized
  MetaScale scale;
};

TrainingData prepare_training_data(const SampleSet& set, double eps = kHalfRangeFloor);

struct EpochRecord {
  std::size_t epoch = 0;
  double critic_loss = 0.0;
  double aux_loss = 0.0;
  double gen_loss = 0.0;
  double diversity = 0.0;
};

using History = std::vector<EpochRecord>;
std::string history_to_csv(const History& h);

/// Raised when a loss becomes non-finite; carries the history so far.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, History history)
      : NumericalError(what), history_(std::move(history)) {}
  const History& history() const { return history_; }

 private:
  History history_;
};

struct TrainResult {
  GeneratorBundle bundle;
  Critics critics;
  History history;
  std::size_t iterations = 0;
};

TrainResult train_dgan(const DGanConfig& config, const SampleSet& data);

struct Generated {
  SampleSet samples;              // denormalized, attributes thresholded
  std::vector<double> normalized;  // n x T*F generator outputs before denormalization
  std::vector<double> mid;        // n x F
  std::vector<double> half;       // n x F
};

Generated generate_detailed(const GeneratorBundle& g, std::size_t n, std::uint64_t seed);
SampleSet generate(const GeneratorBundle& g, std::size_t n, std::uint64_t seed);

}  // namespace ygan::dgan
