// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "yieldgan/error.hpp"
#include "yieldgan/kernels.hpp"

namespace ygan::metrics {

using sampling::SampleSet;

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DataError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred, truth, "rmse");
  if (pred.empty()) throw DataError("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

MapeResult mape(std::span<const double> pred, std::span<const double> truth, bool include_all,
                double floor) {
  require_same_length(pred, truth, "mape");
  if (pred.empty()) throw DataError("mape: empty input");
  MapeResult r;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = std::abs(truth[i]);
    if (!include_all && t < floor) {
      ++r.excluded;
      continue;
    }
    if (t == 0.0) throw NumericalError("mape: zero truth value with include_all");
    s += std::abs(pred[i] - truth[i]) / t;
    ++r.included;
  }
  if (r.included == 0) throw DataError("mape: every point excluded by the |truth| floor");
  r.value = 100.0 * s / static_cast<double>(r.included);
  return r;
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "pearson_corr");
  if (a.size() < 2) throw DataError("pearson_corr: need at least 2 points");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DataError("pearson_corr: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SampleAutocorr avg_sample_autocorr(const SampleSet& set, std::size_t max_lag) {
  if (max_lag >= set.T) throw DataError("avg_sample_autocorr: max_lag must be < T");
  if (set.n == 0) throw DataError("avg_sample_autocorr: empty set");
  const std::size_t L = max_lag + 1;
  // Row (i, f) holds sample i's feature f as a contiguous series.
  std::vector<double> rows(set.n * set.F * set.T);
  for (std::size_t i = 0; i < set.n; ++i) {
    for (std::size_t f = 0; f < set.F; ++f) {
      for (std::size_t t = 0; t < set.T; ++t) {
        rows[(i * set.F + f) * set.T + t] = set.feature(i, t, f);
      }
    }
  }
  const auto n_rows = set.n * set.F;
  std::vector<double> ac(n_rows * L);
  std::vector<unsigned char> degenerate(n_rows);
  kernels::row_autocorr(rows, n_rows, set.T, max_lag, ac, degenerate);

  SampleAutocorr out;
  out.per_feature.assign(set.F, std::vector<double>(L, 0.0));
  out.pooled.assign(L, 0.0);
  std::vector<std::size_t> used(set.F, 0);
  std::size_t pooled_used = 0;
  for (std::size_t i = 0; i < set.n; ++i) {
    for (std::size_t f = 0; f < set.F; ++f) {
      const auto r = i * set.F + f;
      if (degenerate[r]) {
        ++out.skipped;
        continue;
      }
      for (std::size_t l = 0; l < L; ++l) {
        out.per_feature[f][l] += ac[r * L + l];
        out.pooled[l] += ac[r * L + l];
      }
      ++used[f];
      ++pooled_used;
    }
  }
  if (pooled_used == 0) throw DataError("avg_sample_autocorr: every sample is constant");
  for (std::size_t f = 0; f < set.F; ++f) {
    for (auto& v : out.per_feature[f]) {
      v = used[f] ? v / static_cast<double>(used[f]) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  for (auto& v : out.pooled) v /= static_cast<double>(pooled_used);
  return out;
}

std::vector<double> full_series_autocorr(std::span<const double> series, std::size_t max_lag) {
  if (max_lag >= series.size()) throw DataError("full_series_autocorr: max_lag must be < length");
  std::vector<double> out(max_lag + 1);
  unsigned char degenerate = 0;
  kernels::row_autocorr(series, 1, series.size(), max_lag, out,
                        std::span<unsigned char>(&degenerate, 1));
  if (degenerate) throw DataError("full_series_autocorr: constant series");
  return out;
}

std::vector<double> histogram(std::span<const double> values, std::size_t bins, double lo,
                              double hi) {
  if (values.empty()) throw DataError("histogram: empty input");
  if (bins == 0) throw ConfigError("histogram: bins must be positive");
  if (!(lo < hi)) throw ConfigError("histogram: lo must be < hi");
  std::vector<double> counts(bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (std::isnan(v)) throw DataError("histogram: NaN value");
    double pos = std::floor((v - lo) / width);
    pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    counts[static_cast<std::size_t>(pos)] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(values.size());
  return counts;
}

double attribute_proportion(const SampleSet& set, const std::string& attr) {
  const auto a = set.attribute_index(attr);
  if (set.n == 0) throw DataError("attribute_proportion: empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < set.n; ++i) {
    const double v = set.attribute(i, a);
    if (v != 0.0 && v != 1.0) throw DataError("attribute '" + attr + "' is not binary");
    s += v;
  }
  return s / static_cast<double>(set.n);
}

double diversity_score(std::span<const double> rows, std::size_t n, std::size_t dim) {
  if (n < 2) throw DataError("diversity_score: need at least 2 samples");
  if (rows.size() != n * dim) throw DataError("diversity_score: size mismatch");
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t q = 0; q < dim; ++q) s += rows[i * dim + q] * rows[i * dim + q];
    norm += std::sqrt(s);
  }
  norm /= static_cast<double>(n);
  const double dist = kernels::mean_pairwise_distance(rows, n, dim);
  if (dist == 0.0) return 0.0;
  return dist / norm;
}

double diversity_score(const SampleSet& set) {
  return diversity_score(set.features, set.n, set.T * set.F);
}

RocCurve roc_auc(std::span<const double> scores, std::span<const double> labels) {
  require_same_length(scores, labels, "roc_auc");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) throw DataError("roc_auc: labels must be 0/1");
    if (std::isnan(scores[i])) throw DataError("roc_auc: NaN score");
    pos += labels[i] == 1.0;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  double area2 = 0.0;  // twice the area in units of (pos * neg)
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    const std::size_t tp0 = tp, fp0 = fp;
    while (k < order.size() && scores[order[k]] == s) {
      if (labels[order[k]] == 1.0) {
        ++tp;
      } else {
        ++fp;
      }
      ++k;
    }
    area2 += static_cast<double>((fp - fp0) * (tp + tp0));
    roc.thresholds.push_back(s);
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
  }
  roc.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

std::vector<double> feature_column(const SampleSet& set, std::size_t f) {
  std::vector<double> out;
  out.reserve(set.n * set.T);
  for (std::size_t i = 0; i < set.n; ++i) {
    for (std::size_t t = 0; t < set.T; ++t) out.push_back(set.feature(i, t, f));
  }
  return out;
}

FidelityReport fidelity_report(const SampleSet& real, const SampleSet& synthetic,
                               std::size_t max_lag, std::size_t bins) {
  if (real.F != synthetic.F || real.T != synthetic.T) {
    throw DataError("fidelity: real and synthetic sets differ in T or F");
  }
  FidelityReport r;
  r.max_lag = max_lag;
  for (std::size_t f = 0; f < real.F; ++f) {
    r.features.push_back(real.feature_names.size() == real.F ? real.feature_names[f]
                                                             : "x" + std::to_string(f));
  }
  for (std::size_t f = 0; f < real.F; ++f) {
    const auto a = feature_column(real, f);
    const auto b = feature_column(synthetic, f);
    FeatureHistogram h;
    h.feature = r.features[f];
    h.lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
    h.hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    if (!(h.lo < h.hi)) h.hi = h.lo + 1.0;
    h.real = histogram(a, bins, h.lo, h.hi);
    h.synthetic = histogram(b, bins, h.lo, h.hi);
    r.histograms.push_back(std::move(h));
    r.real_full_autocorr.push_back(full_series_autocorr(a, max_lag));
  }
  if (real.F >= 2) {
    r.real_correlation = pearson_corr(feature_column(real, 0), feature_column(real, 1));
    r.synthetic_correlation =
        pearson_corr(feature_column(synthetic, 0), feature_column(synthetic, 1));
  }
  r.real_autocorr = avg_sample_autocorr(real, max_lag);
  r.synthetic_autocorr = avg_sample_autocorr(synthetic, max_lag);
  for (const auto* name : {sampling::kRecessionAttr, sampling::kFutureRecessionAttr}) {
    if (real.has_attribute(name) && synthetic.has_attribute(name)) {
      r.proportions.push_back(
          {name, attribute_proportion(real, name), attribute_proportion(synthetic, name)});
    }
  }
  if (real.n >= 2) r.real_diversity = diversity_score(real);
  if (synthetic.n >= 2) r.synthetic_diversity = diversity_score(synthetic);
  return r;
}

nlohmann::json to_json(const FidelityReport& r) {
  nlohmann::json j;
  j["features"] = r.features;
  j["correlation"] = {{"real", r.real_correlation}, {"synthetic", r.synthetic_correlation}};
  j["max_lag"] = r.max_lag;
  j["diversity"] = {{"real", r.real_diversity}, {"synthetic", r.synthetic_diversity}};
  auto& props = j["attribute_proportions"] = nlohmann::json::object();
  for (const auto& p : r.proportions) {
    props[p.attribute] = {{"real", p.real}, {"synthetic", p.synthetic}};
  }
  j["autocorrelation"] = {
      {"synthetic_pooled", r.synthetic_autocorr.pooled},
      {"real_sample_pooled", r.real_autocorr.pooled},
      {"synthetic_skipped", r.synthetic_autocorr.skipped},
      {"real_skipped", r.real_autocorr.skipped},
  };
  for (std::size_t f = 0; f < r.features.size(); ++f) {
    j["autocorrelation"]["per_feature"][r.features[f]] = {
        {"synthetic", r.synthetic_autocorr.per_feature[f]},
        {"real_sample", r.real_autocorr.per_feature[f]},
        {"real_full", r.real_full_autocorr[f]},
    };
  }
  for (const auto& h : r.histograms) {
    j["histograms"][h.feature] = {
        {"lo", h.lo}, {"hi", h.hi}, {"real", h.real}, {"synthetic", h.synthetic}};
  }
  return j;
}

nlohmann::json to_json(const RocCurve& r) {
  nlohmann::json j;
  j["auc"] = r.auc;
  j["fpr"] = r.fpr;
  j["tpr"] = r.tpr;
  std::vector<nlohmann::json> th;
  for (double t : r.thresholds) {
    th.push_back(std::isinf(t) ? nlohmann::json("inf") : nlohmann::json(t));
  }
  j["thresholds"] = th;
  return j;
}

void write_fidelity_report(const FidelityReport& r, const std::filesystem::path& dir) {
  ingest::write_text_file(dir / "report.json", to_json(r).dump(2) + "\n");
  for (const auto& h : r.histograms) {
    std::string csv = "bin_lo,bin_hi,real,synthetic\n";
    const double w = (h.hi - h.lo) / static_cast<double>(h.real.size());
    for (std::size_t b = 0; b < h.real.size(); ++b) {
      csv += ingest::format_double(h.lo + w * static_cast<double>(b)) + "," +
             ingest::format_double(h.lo + w * static_cast<double>(b + 1)) + "," +
             ingest::format_double(h.real[b]) + "," + ingest::format_double(h.synthetic[b]) +
             "\n";
    }
    ingest::write_text_file(dir / ("histogram_" + h.feature + ".csv"), csv);
  }
  std::string csv = "lag";
  for (const auto& f : r.features) {
    csv += ",synthetic_" + f + ",real_sample_" + f + ",real_full_" + f;
  }
  csv += ",synthetic_pooled,real_sample_pooled\n";
  for (std::size_t l = 0; l <= r.max_lag; ++l) {
    csv += std::to_string(l);
    for (std::size_t f = 0; f < r.features.size(); ++f) {
      csv += "," + ingest::format_double(r.synthetic_autocorr.per_feature[f][l]) + "," +
             ingest::format_double(r.real_autocorr.per_feature[f][l]) + "," +
             ingest::format_double(r.real_full_autocorr[f][l]);
    }
    csv += "," + ingest::format_double(r.synthetic_autocorr.pooled[l]) + "," +
           ingest::format_double(r.real_autocorr.pooled[l]) + "\n";
  }
  ingest::write_text_file(dir / "autocorrelation.csv", csv);
}

}  // namespace ygan::metrics
