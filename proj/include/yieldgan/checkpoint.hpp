// SPDX-License-Identifier: Apache-2.0
//
// Binary model checkpoints.
//
//   bytes 0..7   "YGANCKPT"
//   bytes 8..15  header length L, uint64 little-endian
//   next L bytes UTF-8 JSON header with sorted keys
//   remainder    float64 little-endian payload
//
// The header records the format version, the model kind, everything needed
// to rebuild the model and a tensor table (name and shape) describing the
// payload in order.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "yieldgan/dgan.hpp"
#include "yieldgan/downstream.hpp"

namespace ygan::checkpoint {

inline constexpr std::string_view kMagic = "YGANCKPT";
inline constexpr std::uint32_t kFormatVersion = 1;

enum class Kind { Dgan, Forecaster, Logistic, LstmClassifier };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

struct Archive {
  Kind kind = Kind::Dgan;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, ad::Tensor>> tensors;

  /// Throws DataError if absent.
  const ad::Tensor& tensor(const std::string& name) const;
};

std::string encode(const Archive& a);
/// Throws DataError on a bad magic, version mismatch, malformed header or a
/// payload that is truncated or too long.
Archive decode(std::string_view bytes);

void write_archive(const std::filesystem::path& path, const Archive& a);
Archive read_archive(const std::filesystem::path& path);

/// Kind stored in a checkpoint file.
Kind peek_kind(const std::filesystem::path& path);

void save(const std::filesystem::path& path, const dgan::GeneratorBundle& g);
void save(const std::filesystem::path& path, const downstream::ForecastModel& m);
void save(const std::filesystem::path& path, const downstream::LogisticModel& m);
void save(const std::filesystem::path& path, const downstream::ClassifierModel& m);

// Loaders throw DataError when the file holds another kind or a tensor's
// shape disagrees with the rebuilt model.
dgan::GeneratorBundle load_dgan(const std::filesystem::path& path);
downstream::ForecastModel load_forecaster(const std::filesystem::path& path);
downstream::LogisticModel load_logistic(const std::filesystem::path& path);
downstream::ClassifierModel load_classifier(const std::filesystem::path& path);

}  // namespace ygan::checkpoint
