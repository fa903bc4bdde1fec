// SPDX-License-Identifier: Apache-2.0
//
// Fixed-length sample construction: GAN segments with attribute metadata,
// rolling forecast windows and rolling classifier windows, plus their
// manifest + CSV serialization.
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "yieldgan/ingest.hpp"

namespace ygan::sampling {

enum class Provenance { Real, Synthetic, Combined };
const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

inline constexpr const char* kRecessionAttr = "recession";
inline constexpr const char* kFutureRecessionAttr = "future_recession";

/// n samples of T steps by F features.  Features are sample-major, then
/// time, then feature: features[(i * T + t) * F + f].
struct SampleSet {
  std::size_t n = 0;
  std::size_t T = 0;
  std::size_t F = 0;
  std::vector<double> features;
  std::vector<std::string> feature_names;
  std::vector<double> attributes;  // n x A
  std::vector<std::string> attribute_schema;
  Provenance provenance = Provenance::Real;

  std::size_t num_attributes() const { return attribute_schema.size(); }
  std::size_t sample_size() const { return T * F; }
  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(features).subspan(i * T * F, T * F);
  }
  double feature(std::size_t i, std::size_t t, std::size_t f) const {
    return features[(i * T + t) * F + f];
  }
  double attribute(std::size_t i, std::size_t a) const {
    return attributes[i * num_attributes() + a];
  }
  /// Throws DataError for an unknown name.
  std::size_t attribute_index(const std::string& name) const;
  bool has_attribute(const std::string& name) const;
  /// Throws DataError if sizes or values are inconsistent.
  void validate() const;
  bool operator==(const SampleSet&) const = default;
};

enum class TargetKind { Forecast, Classification };
const char* target_kind_name(TargetKind k);

/// Windowed supervised data.  inputs[(i * W + t) * F + f]; forecast targets
/// are n x H x F in the same layout, classification targets are n labels.
struct SupervisedSet {
  TargetKind kind = TargetKind::Forecast;
  std::size_t n = 0;
  std::size_t W = 0;
  std::size_t H = 0;  // horizon for forecasts, lookahead for classification
  std::size_t F = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  Provenance provenance = Provenance::Real;

  std::size_t target_size() const { return kind == TargetKind::Forecast ? H * F : 1; }
  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * W * F, W * F);
  }
  std::span<const double> target(std::size_t i) const {
    return std::span<const double>(targets).subspan(i * target_size(), target_size());
  }
  void validate() const;
  bool operator==(const SupervisedSet&) const = default;
};

struct AttributePlan {
  bool recession_in_window = true;
  /// Lookahead h for the future-recession attribute; unset to omit it.
  std::optional<std::size_t> future_lookahead;
};

/// Panel features as an interleaved len x 2 array (y1, y10).
std::vector<double> panel_features(const ingest::YieldPanel& panel);

/// Consecutive non-overlapping T-day segments; the trailing remainder is
/// dropped, as are segments whose lookahead runs past the panel when the
/// future-recession attribute is requested.
SampleSet segment_gan_samples(const ingest::YieldPanel& panel, std::size_t T,
                              const AttributePlan& plan);

/// n = len - W - H + 1 windows; sample i covers days [i, i + W) and its
/// target days [i + W, i + W + H).
SupervisedSet rolling_windows(const ingest::YieldPanel& panel, std::size_t W, std::size_t H);

/// W-day windows labeled 1 iff a recession day falls in the h days after the
/// window.  Lookahead past the panel end is read from `extension` (the panel
/// continuing after the last date); windows whose lookahead is still not
/// fully covered are dropped.
SupervisedSet rolling_classifier_windows(const ingest::YieldPanel& panel, std::size_t W,
                                         std::size_t h,
                                         const ingest::YieldPanel* extension = nullptr);

/// Per-segment rolling forecast windows, never crossing segment boundaries.
SupervisedSet windows_from_synthetic(const SampleSet& set, std::size_t W, std::size_t H);

/// Per-segment rolling W-day windows labeled with the segment's attribute.
SupervisedSet classifier_windows_from_synthetic(const SampleSet& set, std::size_t W,
                                                std::size_t lookahead,
                                                const std::string& label_attr =
                                                    kFutureRecessionAttr);

/// Concatenation a ++ b.  An empty operand is the identity.
SupervisedSet combine_sets(const SupervisedSet& a, const SupervisedSet& b);

// Serialization: `path` names the JSON manifest; the CSV payload is written
// next to it with the extension replaced by ".csv".
void write_sample_set(const SampleSet& set, const std::filesystem::path& path);
SampleSet read_sample_set(const std::filesystem::path& path);
void write_supervised_set(const SupervisedSet& set, const std::filesystem::path& path);
SupervisedSet read_supervised_set(const std::filesystem::path& path);
std::filesystem::path payload_path(const std::filesystem::path& manifest);

}  // namespace ygan::sampling
