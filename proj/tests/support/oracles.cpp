// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "yieldgan/metrics.hpp"

namespace ygan::testing::oracle {

using ld = long double;

double rmse(const std::vector<double>& p, const std::vector<double>& t) {
  ld s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (ld)(p[i] - t[i]) * (p[i] - t[i]);
  return (double)std::sqrt(s / p.size());
}

double mape(const std::vector<double>& p, const std::vector<double>& t, bool include_all,
            double floor) {
  ld s = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!include_all && std::fabs(t[i]) < floor) continue;
    s += std::fabs((ld)p[i] - t[i]) / std::fabs((ld)t[i]);
    ++k;
  }
  return (double)(100 * s / k);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = (ld)a.size();
  ld sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  ld cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - sa / n) * (b[i] - sb / n);
    va += (a[i] - sa / n) * (a[i] - sa / n);
    vb += (b[i] - sb / n) * (b[i] - sb / n);
  }
  return (double)(cov / std::sqrt(va * vb));
}

std::vector<double> histogram(const std::vector<double>& v, std::size_t bins, double lo,
                              double hi) {
  std::vector<double> h(bins, 0.0);
  const double w = (hi - lo) / bins;
  for (double x : v) {
    std::size_t b = 0;
    while (b + 1 < bins && x >= lo + (b + 1) * w) ++b;
    h[b] += 1.0;
  }
  for (auto& c : h) c /= v.size();
  return h;
}

std::vector<double> autocorr(const std::vector<double>& x, std::size_t max_lag) {
  ld m = 0;
  for (double v : x) m += v;
  m /= x.size();
  ld den = 0;
  for (double v : x) den += (v - m) * (v - m);
  std::vector<double> r;
  for (std::size_t l = 0; l <= max_lag; ++l) {
    ld num = 0;
    for (std::size_t t = 0; t + l < x.size(); ++t) num += (x[t] - m) * (x[t + l] - m);
    r.push_back((double)(num / den));
  }
  return r;
}

std::vector<double> pooled_autocorr(const sampling::SampleSet& s, std::size_t max_lag) {
  std::vector<ld> acc(max_lag + 1, 0);
  std::size_t used = 0;
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t f = 0; f < s.F; ++f) {
      std::vector<double> x;
      for (std::size_t t = 0; t < s.T; ++t) x.push_back(s.feature(i, t, f));
      if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
      const auto r = autocorr(x, max_lag);
      for (std::size_t l = 0; l <= max_lag; ++l) acc[l] += r[l];
      ++used;
    }
  }
  std::vector<double> out;
  for (auto a : acc) out.push_back((double)(a / used));
  return out;
}

double diversity(const sampling::SampleSet& s) {
  const auto d = s.T * s.F;
  ld dist = 0, norm = 0;
  for (std::size_t i = 0; i < s.n; ++i) {
    ld nn = 0;
    for (std::size_t q = 0; q < d; ++q) nn += (ld)s.features[i * d + q] * s.features[i * d + q];
    norm += std::sqrt(nn);
    for (std::size_t j = 0; j < s.n; ++j) {
      if (i == j) continue;
      ld dd = 0;
      for (std::size_t q = 0; q < d; ++q) {
        const ld e = (ld)s.features[i * d + q] - s.features[j * d + q];
        dd += e * e;
      }
      dist += std::sqrt(dd);
    }
  }
  dist /= (ld)s.n * (s.n - 1);
  norm /= s.n;
  return dist == 0 ? 0.0 : (double)(dist / norm);
}

double auc_pairs(const std::vector<double>& scores, const std::vector<double>& labels) {
  std::uint64_t twice = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1.0) ++pos;
    else ++neg;
    if (labels[i] != 1.0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      twice += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

namespace {

double objective(const std::vector<double>& X, std::size_t p, const std::vector<double>& y,
                 const std::vector<double>& theta, double lambda) {
  double f = 0.0;
  for (std::size_t m = 0; m < y.size(); ++m) {
    double z = theta[p];
    for (std::size_t j = 0; j < p; ++j) z += X[m * p + j] * theta[j];
    f += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y[m] * z;
  }
  for (std::size_t j = 0; j < p; ++j) f += lambda * std::fabs(theta[j]);
  return f;
}

}  // namespace

double logistic_grid_min(const std::vector<double>& X, std::size_t p,
                         const std::vector<double>& y, double lambda) {
  const std::size_t q = p + 1;
  std::vector<double> center(q, 0.0);
  double best = std::numeric_limits<double>::infinity();
  // Level 0 scans the whole box; finer levels scan +-10 steps around the
  // incumbent and re-centre until it is interior.
  const double steps[] = {1.0, 0.1, 0.01};
  for (int level = 0; level < 3; ++level) {
    const double h = steps[level];
    const int k = level == 0 ? 5 : 10;
    for (bool moved = true; moved;) {
      moved = false;
      std::vector<int> idx(q, -k);
      std::vector<double> arg = center, point(q);
      for (;;) {
        bool inside = true;
        for (std::size_t d = 0; d < q; ++d) {
          point[d] = std::round((center[d] + idx[d] * h) / h) * h;
          inside &= std::fabs(point[d]) <= 5.0 + 1e-12;
        }
        if (inside) {
          const double f = objective(X, p, y, point, lambda);
          if (f < best) {
            best = f;
            arg = point;
          }
        }
        std::size_t d = 0;
        while (d < q && ++idx[d] > k) idx[d++] = -k;
        if (d == q) break;
      }
      for (std::size_t d = 0; d < q && level > 0; ++d) {
        if (std::fabs(arg[d] - center[d]) > (k - 0.5) * h && std::fabs(arg[d]) < 5.0 - h) {
          moved = true;
        }
      }
      center = arg;
    }
  }
  return best;
}

sampling::SampleSet random_sample_set(Rng& rng, std::size_t n, std::size_t T, std::size_t F) {
  sampling::SampleSet s;
  s.n = n;
  s.T = T;
  s.F = F;
  for (std::size_t f = 0; f < F; ++f) s.feature_names.push_back("f" + std::to_string(f));
  s.attribute_schema = {"recession"};
  for (std::size_t i = 0; i < n; ++i) {
    const bool flat = rng.uniform() < 0.1;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) {
        s.features.push_back(flat ? 1.25 : rng.uniform(-3.0, 3.0));
      }
    }
    s.attributes.push_back(rng.uniform() < 0.4 ? 1.0 : 0.0);
  }
  return s;
}

std::vector<MetricCheck> check_metrics(std::size_t instances, std::uint64_t seed) {
  std::vector<MetricCheck> out{{"rmse"},     {"mape"},        {"pearson_corr"},
                               {"histogram"}, {"avg_sample_autocorr"}, {"full_series_autocorr"},
                               {"diversity_score"}, {"auc"}};
  auto note = [&](std::size_t k, double e) {
    out[k].max_error = std::max(out[k].max_error, std::isnan(e) ? 1e300 : e);
    ++out[k].instances;
  };
  for (std::size_t it = 0; it < instances; ++it) {
    Rng rng(derive_seed(seed, it));
    const auto n = 2 + rng.below(40);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-5.0, 5.0);
      b[i] = rng.uniform() < 0.1 ? rng.uniform(-0.005, 0.005) : rng.uniform(-5.0, 5.0);
    }
    note(0, std::fabs(metrics::rmse(a, b) - rmse(a, b)));
    const bool all = rng.below(2);
    std::size_t kept = 0;
    for (double t : b) kept += std::fabs(t) >= metrics::kMapeFloor;
    if (all || kept > 0) {
      const double m = metrics::mape(a, b, all).value;
      note(1, std::fabs(m - mape(a, b, all, metrics::kMapeFloor)) / std::max(1.0, std::fabs(m)));
    }
    note(2, std::fabs(metrics::pearson_corr(a, b) - pearson(a, b)));
    const auto bins = 1 + rng.below(12);
    const double lo = rng.uniform(-4.0, 0.0), hi = lo + rng.uniform(0.5, 6.0);
    const auto h1 = metrics::histogram(a, bins, lo, hi), h2 = histogram(a, bins, lo, hi);
    double eh = 0.0;
    for (std::size_t k = 0; k < bins; ++k) eh = std::max(eh, std::fabs(h1[k] - h2[k]));
    note(3, eh);

    const auto T = 3 + rng.below(20), F = 1 + rng.below(3), N = 2 + rng.below(8);
    const auto set = random_sample_set(rng, N, T, F);
    const auto lag = rng.below(T);
    bool any_varying = false;
    for (std::size_t i = 0; i < N && !any_varying; ++i) any_varying = set.feature(i, 0, 0) != 1.25;
    if (any_varying) {
      const auto ac = metrics::avg_sample_autocorr(set, lag).pooled;
      const auto ao = pooled_autocorr(set, lag);
      double e = 0.0;
      for (std::size_t l = 0; l <= lag; ++l) e = std::max(e, std::fabs(ac[l] - ao[l]));
      note(4, e);
    }
    const auto fl = metrics::full_series_autocorr(a, std::min<std::size_t>(n - 1, rng.below(n)));
    const auto fo = autocorr(a, fl.size() - 1);
    double ef = 0.0;
    for (std::size_t l = 0; l < fl.size(); ++l) ef = std::max(ef, std::fabs(fl[l] - fo[l]));
    note(5, ef);
    note(6, std::fabs(metrics::diversity_score(set) - diversity(set)));

    std::vector<double> scores(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores so ties are common.
      scores[i] = std::round(rng.uniform(0.0, 1.0) * 8.0) / 8.0;
      labels[i] = i == 0 ? 1.0 : i == 1 ? 0.0 : static_cast<double>(rng.below(2));
    }
    const double auc = metrics::roc_auc(scores, labels).auc, ref = auc_pairs(scores, labels);
    note(7, std::fabs(auc - ref));
    out[7].auc_exact &= auc == ref;
  }
  return out;
}

}  // namespace ygan::testing::oracle
