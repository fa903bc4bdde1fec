// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "yieldgan/error.hpp"
#include "yieldgan/ingest.hpp"

namespace ygan::checkpoint {

using ad::Tensor;

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

Tensor from_vector(const std::vector<double>& v) { return Tensor({v.size()}, v); }

std::vector<double> to_vector(const Tensor& t) { return t.storage(); }

void add_params(Archive& a, std::vector<ad::Parameter*> params) {
  for (auto* p : params) a.tensors.emplace_back(p->name, p->value);
}

void load_params(const Archive& a, std::vector<ad::Parameter*> params) {
  for (auto* p : params) {
    const auto& t = a.tensor(p->name);
    if (t.shape() != p->value.shape()) {
      throw DataError("checkpoint: tensor '" + p->name + "' has shape " +
                      ad::shape_string(t.shape()) + ", model expects " +
                      ad::shape_string(p->value.shape()));
    }
    p->value = t;
  }
}

Archive read_kind(const std::filesystem::path& path, Kind expected) {
  auto a = read_archive(path);
  if (a.kind != expected) {
    throw DataError("checkpoint " + path.string() + " holds a " + kind_name(a.kind) +
                    " model, expected " + kind_name(expected));
  }
  return a;
}

template <typename T>
T meta_get(const Archive& a, const char* key) {
  try {
    return a.meta.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad or missing header field '") + key + "'");
  }
}

downstream::MinMaxScaler scaler_from(const Archive& a) {
  downstream::MinMaxScaler s;
  s.lo = to_vector(a.tensor("scaler.lo"));
  s.hi = to_vector(a.tensor("scaler.hi"));
  return s;
}

void add_scaler(Archive& a, const downstream::MinMaxScaler& s) {
  a.tensors.emplace_back("scaler.lo", from_vector(s.lo));
  a.tensors.emplace_back("scaler.hi", from_vector(s.hi));
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Dgan: return "dgan";
    case Kind::Forecaster: return "forecaster";
    case Kind::Logistic: return "logistic";
    case Kind::LstmClassifier: return "lstm_classifier";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  for (auto k : {Kind::Dgan, Kind::Forecaster, Kind::Logistic, Kind::LstmClassifier}) {
    if (name == kind_name(k)) return k;
  }
  throw DataError("checkpoint: unknown model kind '" + name + "'");
}

const Tensor& Archive::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("checkpoint: missing tensor '" + name + "'");
}

std::string encode(const Archive& a) {
  nlohmann::json header = a.meta;
  header["format_version"] = kFormatVersion;
  header["kind"] = kind_name(a.kind);
  auto table = nlohmann::json::array();
  for (const auto& [name, t] : a.tensors) table.push_back({{"name", name}, {"shape", t.shape()}});
  header["tensors"] = std::move(table);
  const auto text = header.dump();

  std::string out(kMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto& [name, t] : a.tensors) {
    for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Archive decode(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("checkpoint: not a checkpoint file (bad magic)");
  }
  const auto len = get_u64(bytes, kMagic.size());
  const std::size_t body = kMagic.size() + 8;
  if (len > bytes.size() - body) throw DataError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(body, len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (!header.is_object()) throw DataError("checkpoint: header is not an object");
  const auto version = header.value("format_version", std::uint64_t{0});
  if (version != kFormatVersion) {
    throw DataError("checkpoint: format version " + std::to_string(version) + ", expected " +
                    std::to_string(kFormatVersion));
  }

  Archive a;
  try {
    a.kind = kind_from_name(header.at("kind").get<std::string>());
    std::size_t at = body + len;
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<ad::Shape>();
      const auto count = ad::shape_size(shape);
      if (count > (bytes.size() - at) / 8) {
        throw DataError("checkpoint: truncated payload at tensor '" + name + "'");
      }
      Tensor t(shape);
      for (std::size_t i = 0; i < count; ++i, at += 8) {
        t[i] = std::bit_cast<double>(get_u64(bytes, at));
      }
      a.tensors.emplace_back(name, std::move(t));
    }
    if (at != bytes.size()) throw DataError("checkpoint: trailing bytes after payload");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed tensor table: ") + e.what());
  }
  header.erase("format_version");
  header.erase("kind");
  header.erase("tensors");
  a.meta = std::move(header);
  return a;
}

void write_archive(const std::filesystem::path& path, const Archive& a) {
  ingest::write_text_file(path, encode(a));
}

Archive read_archive(const std::filesystem::path& path) {
  return decode(ingest::read_text_file(path));
}

Kind peek_kind(const std::filesystem::path& path) { return read_archive(path).kind; }

// ---------------------------------------------------------------------------

void save(const std::filesystem::path& path, const dgan::GeneratorBundle& g) {
  Archive a;
  a.kind = Kind::Dgan;
  a.meta["config"] = dgan::to_json(g.config());
  a.meta["attribute_names"] = g.attribute_names();
  a.meta["feature_names"] = g.feature_names();
  const auto& s = g.meta_scale();
  a.tensors.emplace_back("meta_scale.mid_center", from_vector(s.mid_center));
  a.tensors.emplace_back("meta_scale.mid_spread", from_vector(s.mid_spread));
  a.tensors.emplace_back("meta_scale.half_top", from_vector(s.half_top));
  auto copy = g;
  add_params(a, copy.parameters());
  write_archive(path, a);
}

dgan::GeneratorBundle load_dgan(const std::filesystem::path& path) {
  const auto a = read_kind(path, Kind::Dgan);
  dgan::DGanConfig config;
  try {
    config = dgan::dgan_config_from_json(a.meta.at("config"));
  } catch (const nlohmann::json::exception&) {
    throw DataError("checkpoint: missing dgan config");
  }
  dgan::MetaScale scale;
  scale.mid_center = to_vector(a.tensor("meta_scale.mid_center"));
  scale.mid_spread = to_vector(a.tensor("meta_scale.mid_spread"));
  scale.half_top = to_vector(a.tensor("meta_scale.half_top"));
  Rng rng(0);
  dgan::GeneratorBundle g(config, meta_get<std::vector<std::string>>(a, "attribute_names"),
                          meta_get<std::vector<std::string>>(a, "feature_names"), scale, rng);
  if (scale.mid_center.size() != g.num_features() || scale.mid_spread.size() != g.num_features() ||
      scale.half_top.size() != g.num_features()) {
    throw DataError("checkpoint: metadata scale does not match the feature count");
  }
  load_params(a, g.parameters());
  return g;
}

void save(const std::filesystem::path& path, const downstream::ForecastModel& m) {
  Archive a;
  a.kind = Kind::Forecaster;
  a.meta["config"] = downstream::to_json(m.config());
  a.meta["W"] = m.W();
  a.meta["H"] = m.H();
  a.meta["F"] = m.F();
  add_scaler(a, m.scaler());
  auto copy = m;
  add_params(a, copy.parameters());
  write_archive(path, a);
}

downstream::ForecastModel load_forecaster(const std::filesystem::path& path) {
  const auto a = read_kind(path, Kind::Forecaster);
  const auto config = downstream::forecaster_config_from_json(a.meta.value("config", nlohmann::json::object()));
  Rng rng(0);
  downstream::ForecastModel m(config, meta_get<std::size_t>(a, "W"), meta_get<std::size_t>(a, "H"),
                              meta_get<std::size_t>(a, "F"), scaler_from(a), rng);
  if (m.scaler().lo.size() != m.F() || m.scaler().hi.size() != m.F()) {
    throw DataError("checkpoint: scaler does not match the feature count");
  }
  load_params(a, m.parameters());
  return m;
}

void save(const std::filesystem::path& path, const downstream::LogisticModel& m) {
  Archive a;
  a.kind = Kind::Logistic;
  a.meta["W"] = m.W;
  a.meta["F"] = m.F;
  a.meta["single_class"] = m.single_class;
  a.tensors.emplace_back("beta", from_vector(m.beta));
  a.tensors.emplace_back("intercept", Tensor::scalar(m.intercept));
  a.tensors.emplace_back("lambda", Tensor::scalar(m.lambda));
  a.tensors.emplace_back("standardizer.mean", from_vector(m.standardizer.mean));
  a.tensors.emplace_back("standardizer.sd", from_vector(m.standardizer.sd));
  if (!m.cv_loss.empty()) a.tensors.emplace_back("cv_loss", from_vector(m.cv_loss));
  write_archive(path, a);
}

downstream::LogisticModel load_logistic(const std::filesystem::path& path) {
  const auto a = read_kind(path, Kind::Logistic);
  downstream::LogisticModel m;
  m.W = meta_get<std::size_t>(a, "W");
  m.F = meta_get<std::size_t>(a, "F");
  m.single_class = meta_get<bool>(a, "single_class");
  m.beta = to_vector(a.tensor("beta"));
  m.intercept = a.tensor("intercept").item();
  m.lambda = a.tensor("lambda").item();
  m.standardizer.mean = to_vector(a.tensor("standardizer.mean"));
  m.standardizer.sd = to_vector(a.tensor("standardizer.sd"));
  for (const auto& [n, t] : a.tensors) {
    if (n == "cv_loss") m.cv_loss = to_vector(t);
  }
  const auto p = m.W * m.F;
  if (m.beta.size() != p || m.standardizer.mean.size() != p || m.standardizer.sd.size() != p) {
    throw DataError("checkpoint: logistic coefficients do not match W x F = " + std::to_string(p));
  }
  return m;
}

void save(const std::filesystem::path& path, const downstream::ClassifierModel& m) {
  Archive a;
  a.kind = Kind::LstmClassifier;
  a.meta["config"] = downstream::to_json(m.config());
  a.meta["W"] = m.W();
  a.meta["F"] = m.F();
  add_scaler(a, m.scaler());
  auto copy = m;
  add_params(a, copy.parameters());
  write_archive(path, a);
}

downstream::ClassifierModel load_classifier(const std::filesystem::path& path) {
  const auto a = read_kind(path, Kind::LstmClassifier);
  const auto config = downstream::classifier_config_from_json(a.meta.value("config", nlohmann::json::object()));
  Rng rng(0);
  downstream::ClassifierModel m(config, meta_get<std::size_t>(a, "W"), meta_get<std::size_t>(a, "F"),
                                scaler_from(a), rng);
  if (m.scaler().lo.size() != m.F() || m.scaler().hi.size() != m.F()) {
    throw DataError("checkpoint: scaler does not match the feature count");
  }
  load_params(a, m.parameters());
  return m;
}

}  // namespace ygan::checkpoint
