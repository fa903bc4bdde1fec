// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <string_view>

#include "yieldgan/error.hpp"
#include "yieldgan/kernels.hpp"

namespace ygan::sampling {

using ingest::YieldPanel;
using json = nlohmann::json;

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Real: return "real";
    case Provenance::Synthetic: return "synthetic";
    case Provenance::Combined: return "combined";
  }
  return "?";
}

Provenance provenance_from_name(const std::string& name) {
  if (name == "real") return Provenance::Real;
  if (name == "synthetic") return Provenance::Synthetic;
  if (name == "combined") return Provenance::Combined;
  throw DataError("unknown provenance '" + name + "'");
}

const char* target_kind_name(TargetKind k) {
  return k == TargetKind::Forecast ? "forecast" : "classification";
}

std::size_t SampleSet::attribute_index(const std::string& name) const {
  const auto it = std::find(attribute_schema.begin(), attribute_schema.end(), name);
  if (it == attribute_schema.end()) throw DataError("unknown attribute '" + name + "'");
  return static_cast<std::size_t>(it - attribute_schema.begin());
}

bool SampleSet::has_attribute(const std::string& name) const {
  return std::find(attribute_schema.begin(), attribute_schema.end(), name) !=
         attribute_schema.end();
}

void SampleSet::validate() const {
  if (features.size() != n * T * F) throw DataError("sample set feature size mismatch");
  if (attributes.size() != n * num_attributes()) {
    throw DataError("sample set attribute size mismatch");
  }
  if (!feature_names.empty() && feature_names.size() != F) {
    throw DataError("sample set feature name count mismatch");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw DataError("sample set contains a non-finite feature");
  }
  for (const auto* name : {kRecessionAttr, kFutureRecessionAttr}) {
    if (!has_attribute(name)) continue;
    const auto a = attribute_index(name);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = attribute(i, a);
      if (v != 0.0 && v != 1.0) throw DataError(std::string("attribute '") + name + "' not binary");
    }
  }
}

void SupervisedSet::validate() const {
  if (inputs.size() != n * W * F) throw DataError("supervised set input size mismatch");
  if (targets.size() != n * target_size()) throw DataError("supervised set target size mismatch");
  if (kind == TargetKind::Classification) {
    for (double v : targets) {
      if (v != 0.0 && v != 1.0) throw DataError("classification target not binary");
    }
  }
}

std::vector<double> panel_features(const YieldPanel& panel) {
  std::vector<double> out(panel.size() * 2);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    out[2 * i] = panel.y1[i];
    out[2 * i + 1] = panel.y10[i];
  }
  return out;
}

namespace {

// prefix[i] = number of recession days in [0, i).
std::vector<std::size_t> recession_prefix(std::span<const std::uint8_t> flags) {
  std::vector<std::size_t> prefix(flags.size() + 1, 0);
  for (std::size_t i = 0; i < flags.size(); ++i) prefix[i + 1] = prefix[i] + flags[i];
  return prefix;
}

bool any_in(const std::vector<std::size_t>& prefix, std::size_t begin, std::size_t end) {
  return prefix[end] > prefix[begin];
}

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

SampleSet segment_gan_samples(const YieldPanel& panel, std::size_t T, const AttributePlan& plan) {
  require_positive(T, "segment length T");
  if (panel.size() < T) {
    throw DataError("panel has " + std::to_string(panel.size()) + " days, fewer than T=" +
                    std::to_string(T));
  }
  const auto prefix = recession_prefix(panel.recession);
  const auto src = panel_features(panel);

  SampleSet set;
  set.T = T;
  set.F = 2;
  set.feature_names = {"y1", "y10"};
  if (plan.recession_in_window) set.attribute_schema.push_back(kRecessionAttr);
  if (plan.future_lookahead) {
    require_positive(*plan.future_lookahead, "lookahead");
    set.attribute_schema.push_back(kFutureRecessionAttr);
  }

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + T <= panel.size(); s += T) {
    if (plan.future_lookahead && s + T + *plan.future_lookahead > panel.size()) break;
    starts.push_back(s);
    if (plan.recession_in_window) set.attributes.push_back(any_in(prefix, s, s + T) ? 1.0 : 0.0);
    if (plan.future_lookahead) {
      const auto end = s + T;
      set.attributes.push_back(any_in(prefix, end, end + *plan.future_lookahead) ? 1.0 : 0.0);
    }
  }
  if (starts.empty()) throw DataError("panel too short for a segment with its lookahead");
  set.n = starts.size();
  set.features.resize(set.n * T * 2);
  kernels::gather_windows(src, 2, starts, T, set.features);
  return set;
}

SupervisedSet rolling_windows(const YieldPanel& panel, std::size_t W, std::size_t H) {
  require_positive(W, "window W");
  require_positive(H, "horizon H");
  if (panel.size() < W + H) {
    throw DataError("panel has " + std::to_string(panel.size()) + " days, need at least W+H=" +
                    std::to_string(W + H));
  }
  const auto src = panel_features(panel);
  SupervisedSet out;
  out.kind = TargetKind::Forecast;
  out.W = W;
  out.H = H;
  out.F = 2;
  out.n = panel.size() - W - H + 1;
  std::vector<std::size_t> starts(out.n), target_starts(out.n);
  for (std::size_t i = 0; i < out.n; ++i) {
    starts[i] = i;
    target_starts[i] = i + W;
  }
  out.inputs.resize(out.n * W * 2);
  out.targets.resize(out.n * H * 2);
  kernels::gather_windows(src, 2, starts, W, out.inputs);
  kernels::gather_windows(src, 2, target_starts, H, out.targets);
  return out;
}

SupervisedSet rolling_classifier_windows(const YieldPanel& panel, std::size_t W, std::size_t h,
                                         const YieldPanel* extension) {
  require_positive(W, "window W");
  require_positive(h, "lookahead h");
  if (panel.size() < W) throw DataError("panel shorter than the window");
  std::vector<std::uint8_t> flags = panel.recession;
  if (extension && !extension->empty()) {
    if (!(panel.dates.back() < extension->dates.front())) {
      throw DataError("label extension must start after the panel ends");
    }
    flags.insert(flags.end(), extension->recession.begin(), extension->recession.end());
  }
  const auto prefix = recession_prefix(flags);

  SupervisedSet out;
  out.kind = TargetKind::Classification;
  out.W = W;
  out.H = h;
  out.F = 2;
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + W <= panel.size(); ++i) {
    const auto end = i + W;
    if (end + h > flags.size()) break;
    starts.push_back(i);
    out.targets.push_back(any_in(prefix, end, end + h) ? 1.0 : 0.0);
  }
  if (starts.empty()) throw DataError("no window has a complete lookahead");
  out.n = starts.size();
  out.inputs.resize(out.n * W * 2);
  kernels::gather_windows(panel_features(panel), 2, starts, W, out.inputs);
  return out;
}

SupervisedSet windows_from_synthetic(const SampleSet& set, std::size_t W, std::size_t H) {
  require_positive(W, "window W");
  require_positive(H, "horizon H");
  if (set.T < W + H) {
    throw ConfigError("segment length " + std::to_string(set.T) + " < W+H=" +
                      std::to_string(W + H));
  }
  const auto per = set.T - W - H + 1;
  SupervisedSet out;
  out.kind = TargetKind::Forecast;
  out.W = W;
  out.H = H;
  out.F = set.F;
  out.n = set.n * per;
  out.provenance = set.provenance;
  std::vector<std::size_t> starts(out.n), target_starts(out.n);
  for (std::size_t s = 0; s < set.n; ++s) {
    for (std::size_t j = 0; j < per; ++j) {
      starts[s * per + j] = s * set.T + j;
      target_starts[s * per + j] = s * set.T + j + W;
    }
  }
  out.inputs.resize(out.n * W * set.F);
  out.targets.resize(out.n * H * set.F);
  kernels::gather_windows(set.features, set.F, starts, W, out.inputs);
  kernels::gather_windows(set.features, set.F, target_starts, H, out.targets);
  return out;
}

SupervisedSet classifier_windows_from_synthetic(const SampleSet& set, std::size_t W,
                                                std::size_t lookahead,
                                                const std::string& label_attr) {
  require_positive(W, "window W");
  if (set.T < W) {
    throw ConfigError("segment length " + std::to_string(set.T) + " < W=" + std::to_string(W));
  }
  const auto a = set.attribute_index(label_attr);
  const auto per = set.T - W + 1;
  SupervisedSet out;
  out.kind = TargetKind::Classification;
  out.W = W;
  out.H = lookahead;
  out.F = set.F;
  out.n = set.n * per;
  out.provenance = set.provenance;
  std::vector<std::size_t> starts(out.n);
  out.targets.resize(out.n);
  for (std::size_t s = 0; s < set.n; ++s) {
    const double label = set.attribute(s, a) >= 0.5 ? 1.0 : 0.0;
    for (std::size_t j = 0; j < per; ++j) {
      starts[s * per + j] = s * set.T + j;
      out.targets[s * per + j] = label;
    }
  }
  out.inputs.resize(out.n * W * set.F);
  kernels::gather_windows(set.features, set.F, starts, W, out.inputs);
  return out;
}

SupervisedSet combine_sets(const SupervisedSet& a, const SupervisedSet& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  if (a.kind != b.kind || a.W != b.W || a.H != b.H || a.F != b.F) {
    throw DataError("cannot combine sets with different kind, W, H or F");
  }
  SupervisedSet out = a;
  out.n = a.n + b.n;
  out.inputs.insert(out.inputs.end(), b.inputs.begin(), b.inputs.end());
  out.targets.insert(out.targets.end(), b.targets.begin(), b.targets.end());
  out.provenance = a.provenance == b.provenance ? a.provenance : Provenance::Combined;
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::filesystem::path payload_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".csv");
  if (p == manifest) p += ".payload.csv";
  return p;
}

namespace {

std::string join_row(std::span<const double> a, std::span<const double> b) {
  std::string row;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) row += ',';
    row += ingest::format_double(a[i]);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!row.empty() || i) row += ',';
    row += ingest::format_double(b[i]);
  }
  row += '\n';
  return row;
}

// Parses the payload rows (header skipped) into a flat row-major array.
std::vector<double> read_payload(const std::filesystem::path& path, std::size_t rows,
                                 std::size_t cols) {
  const auto text = ingest::read_text_file(path);
  std::vector<double> out;
  out.reserve(rows * cols);
  std::size_t pos = 0, line_no = 0, data_rows = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 || line.empty()) continue;
    std::size_t count = 0, start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto field = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
      const auto v = ingest::parse_double(field);
      if (!v) {
        throw DataError(path.string() + ": bad number on line " + std::to_string(line_no));
      }
      out.push_back(*v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != cols) {
      throw DataError(path.string() + ": expected " + std::to_string(cols) + " fields on line " +
                      std::to_string(line_no));
    }
    ++data_rows;
  }
  if (data_rows != rows) {
    throw DataError(path.string() + ": expected " + std::to_string(rows) + " rows, found " +
                    std::to_string(data_rows));
  }
  return out;
}

json read_manifest(const std::filesystem::path& path, const std::string& type) {
  json m;
  try {
    m = json::parse(ingest::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid manifest JSON: " + e.what());
  }
  if (m.value("type", "") != type) {
    throw DataError(path.string() + ": manifest type is not '" + type + "'");
  }
  return m;
}

template <typename T>
T field(const json& m, const char* key) {
  try {
    return m.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace

void write_sample_set(const SampleSet& set, const std::filesystem::path& path) {
  set.validate();
  const auto payload = payload_path(path);
  json m;
  m["type"] = "sample_set";
  m["n"] = set.n;
  m["T"] = set.T;
  m["F"] = set.F;
  m["feature_names"] = set.feature_names;
  m["attribute_schema"] = set.attribute_schema;
  m["provenance"] = provenance_name(set.provenance);
  m["payload"] = payload.filename().string();
  ingest::write_text_file(path, m.dump(2) + "\n");

  std::string csv;
  for (const auto& a : set.attribute_schema) csv += a + ",";
  for (std::size_t t = 0; t < set.T; ++t) {
    for (std::size_t f = 0; f < set.F; ++f) {
      const auto name = set.feature_names.empty() ? "x" + std::to_string(f) : set.feature_names[f];
      csv += name + "[" + std::to_string(t) + "]";
      csv += (t + 1 == set.T && f + 1 == set.F) ? "\n" : ",";
    }
  }
  const auto A = set.num_attributes();
  for (std::size_t i = 0; i < set.n; ++i) {
    csv += join_row(std::span<const double>(set.attributes).subspan(i * A, A), set.sample(i));
  }
  ingest::write_text_file(payload, csv);
}

SampleSet read_sample_set(const std::filesystem::path& path) {
  const auto m = read_manifest(path, "sample_set");
  SampleSet set;
  set.n = field<std::size_t>(m, "n");
  set.T = field<std::size_t>(m, "T");
  set.F = field<std::size_t>(m, "F");
  set.feature_names = field<std::vector<std::string>>(m, "feature_names");
  set.attribute_schema = field<std::vector<std::string>>(m, "attribute_schema");
  set.provenance = provenance_from_name(field<std::string>(m, "provenance"));
  const auto A = set.num_attributes();
  const auto cols = A + set.T * set.F;
  const auto flat =
      read_payload(path.parent_path() / field<std::string>(m, "payload"), set.n, cols);
  set.attributes.reserve(set.n * A);
  set.features.reserve(set.n * set.T * set.F);
  for (std::size_t i = 0; i < set.n; ++i) {
    const auto row = flat.begin() + static_cast<std::ptrdiff_t>(i * cols);
    set.attributes.insert(set.attributes.end(), row, row + static_cast<std::ptrdiff_t>(A));
    set.features.insert(set.features.end(), row + static_cast<std::ptrdiff_t>(A),
                        row + static_cast<std::ptrdiff_t>(cols));
  }
  set.validate();
  return set;
}

void write_supervised_set(const SupervisedSet& set, const std::filesystem::path& path) {
  set.validate();
  const auto payload = payload_path(path);
  json m;
  m["type"] = "supervised_set";
  m["kind"] = target_kind_name(set.kind);
  m["n"] = set.n;
  m["W"] = set.W;
  m["H"] = set.H;
  m["F"] = set.F;
  m["provenance"] = provenance_name(set.provenance);
  m["payload"] = payload.filename().string();
  ingest::write_text_file(path, m.dump(2) + "\n");

  std::string csv;
  for (std::size_t t = 0; t < set.W; ++t) {
    for (std::size_t f = 0; f < set.F; ++f) {
      csv += "in" + std::to_string(f) + "[" + std::to_string(t) + "],";
    }
  }
  if (set.kind == TargetKind::Forecast) {
    for (std::size_t t = 0; t < set.H; ++t) {
      for (std::size_t f = 0; f < set.F; ++f) {
        csv += "out" + std::to_string(f) + "[" + std::to_string(t) + "]";
        csv += (t + 1 == set.H && f + 1 == set.F) ? "\n" : ",";
      }
    }
  } else {
    csv += "label\n";
  }
  for (std::size_t i = 0; i < set.n; ++i) csv += join_row(set.input(i), set.target(i));
  ingest::write_text_file(payload, csv);
}

SupervisedSet read_supervised_set(const std::filesystem::path& path) {
  const auto m = read_manifest(path, "supervised_set");
  SupervisedSet set;
  const auto kind = field<std::string>(m, "kind");
  if (kind == "forecast") {
    set.kind = TargetKind::Forecast;
  } else if (kind == "classification") {
    set.kind = TargetKind::Classification;
  } else {
    throw DataError("unknown supervised set kind '" + kind + "'");
  }
  set.n = field<std::size_t>(m, "n");
  set.W = field<std::size_t>(m, "W");
  set.H = field<std::size_t>(m, "H");
  set.F = field<std::size_t>(m, "F");
  set.provenance = provenance_from_name(field<std::string>(m, "provenance"));
  const auto in_cols = set.W * set.F;
  const auto cols = in_cols + set.target_size();
  const auto flat =
      read_payload(path.parent_path() / field<std::string>(m, "payload"), set.n, cols);
  for (std::size_t i = 0; i < set.n; ++i) {
    const auto row = flat.begin() + static_cast<std::ptrdiff_t>(i * cols);
    set.inputs.insert(set.inputs.end(), row, row + static_cast<std::ptrdiff_t>(in_cols));
    set.targets.insert(set.targets.end(), row + static_cast<std::ptrdiff_t>(in_cols),
                       row + static_cast<std::ptrdiff_t>(cols));
  }
  set.validate();
  return set;
}

}  // namespace ygan::sampling
