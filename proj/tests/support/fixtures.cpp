// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

namespace ygan::testing {

using ingest::Date;
using ingest::format_date;
using ingest::format_double;
using ingest::parse_date;

const std::vector<std::pair<std::string, std::string>>& nber_recessions() {
  static const std::vector<std::pair<std::string, std::string>> spans{
      {"1960-05-01", "1961-02-28"}, {"1970-01-01", "1970-11-30"}, {"1973-12-01", "1975-03-31"},
      {"1980-02-01", "1980-07-31"}, {"1981-08-01", "1982-11-30"}, {"1990-08-01", "1991-03-31"},
      {"2001-04-01", "2001-11-30"}, {"2008-01-01", "2009-06-30"}, {"2020-03-01", "2020-04-30"},
  };
  return spans;
}

namespace {

bool in_recession(Date d) {
  for (const auto& [a, b] : nber_recessions()) {
    if (parse_date(a) <= d && d <= parse_date(b)) return true;
  }
  return false;
}

// Days until the next recession start (large if none within a year).
long days_to_recession(Date d) {
  long best = 1 << 20;
  for (const auto& [a, b] : nber_recessions()) {
    const auto gap = (parse_date(a) - d).count();
    if (gap > 0) best = std::min(best, static_cast<long>(gap));
  }
  return best;
}

struct Day {
  Date date;
  double y1;
  double y10;
  bool rec;
};

std::vector<Day> simulate(Date start, Date end, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Day> out;
  double y1 = 3.0, spread = 1.0;
  for (Date d = start; d <= end; d += std::chrono::days{1}) {
    if (!ingest::is_weekday(d)) continue;
    const bool rec = in_recession(d);
    const auto ahead = days_to_recession(d);
    const double spread_target = ahead < 360 ? -0.4 : (rec ? 1.8 : 1.0);
    const double level_target = rec ? 3.0 : 5.0;
    y1 += 0.004 * (level_target - y1) + 0.06 * rng.normal();
    spread += 0.01 * (spread_target - spread) + 0.03 * rng.normal();
    y1 = std::max(y1, 0.05);
    out.push_back({d, y1, y1 + spread, rec});
  }
  return out;
}

std::string fmt(double v) {
  // Two decimals, as FRED publishes yields.
  return format_double(std::round(v * 100.0) / 100.0);
}

}  // namespace

ingest::YieldPanel synthetic_panel(const FixtureOptions& opt) {
  ingest::YieldPanel p;
  for (const auto& day : simulate(parse_date(opt.start), parse_date(opt.end), opt.seed)) {
    p.dates.push_back(day.date);
    p.y1.push_back(std::round(day.y1 * 100.0) / 100.0);
    p.y10.push_back(std::round(day.y10 * 100.0) / 100.0);
    p.recession.push_back(day.rec ? 1 : 0);
  }
  return p;
}

FredTexts synthetic_fred(const FixtureOptions& opt) {
  FredTexts t;
  t.y1 = "observation_date,DGS1\n";
  t.y10 = "observation_date,DGS10\n";
  t.rec = "observation_date,USRECD\n";
  Rng gaps(derive_seed(opt.seed, "fixture.gaps"));
  for (const auto& day : simulate(parse_date(opt.start), parse_date(opt.end), opt.seed)) {
    const auto ds = format_date(day.date);
    const bool miss1 = gaps.uniform() < opt.missing_rate;
    const bool miss10 = gaps.uniform() < opt.missing_rate;
    t.y1 += ds + "," + (miss1 ? std::string(".") : fmt(day.y1)) + "\n";
    t.y10 += ds + "," + (miss10 ? std::string(".") : fmt(day.y10)) + "\n";
  }
  for (Date d = parse_date(opt.start); d <= parse_date(opt.end); d += std::chrono::days{1}) {
    t.rec += format_date(d) + "," + (in_recession(d) ? "1" : "0") + "\n";
  }
  return t;
}

std::size_t weekday_count(const std::string& start, const std::string& end) {
  std::size_t n = 0;
  for (Date d = parse_date(start); d <= parse_date(end); d += std::chrono::days{1}) {
    n += ingest::is_weekday(d);
  }
  return n;
}

ingest::YieldPanel calendar_panel(const std::string& start, std::size_t days, std::uint64_t seed) {
  Rng rng(seed);
  ingest::YieldPanel p;
  double y1 = 4.0;
  for (Date d = parse_date(start); p.size() < days; d += std::chrono::days{1}) {
    if (!ingest::is_weekday(d)) continue;
    y1 = std::max(0.05, y1 + 0.05 * rng.normal());
    p.dates.push_back(d);
    p.y1.push_back(y1);
    p.y10.push_back(y1 + 1.0 + 0.1 * rng.normal());
    p.recession.push_back(in_recession(d) ? 1 : 0);
  }
  return p;
}

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("yieldgan_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace ygan::testing
