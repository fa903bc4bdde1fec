// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "yieldgan/error.hpp"

namespace ygan::ingest {

namespace chr = std::chrono;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

// Splits text into lines, dropping blank ones but remembering 1-based numbers.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t pos = 0, number = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    ++number;
    if (!line.empty()) out.emplace_back(number, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

bool is_missing_marker(std::string_view v) { return v.empty() || v == "."; }

}  // namespace

Date parse_date(std::string_view text) {
  text = trim(text);
  auto bad = [&] { return DataError("malformed date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view part, auto& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc() || p != part.data() + part.size()) throw bad();
  };
  parse(text.substr(0, 4), y);
  parse(text.substr(5, 2), m);
  parse(text.substr(8, 2), d);
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) throw bad();
  return Date{ymd};
}

std::string format_date(Date d) {
  const chr::year_month_day ymd{d};
  std::array<char, 16> buf{};
  std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return std::string(buf.data());
}

bool is_weekday(Date d) {
  const chr::weekday wd{d};
  return wd != chr::Saturday && wd != chr::Sunday;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
  return v;
}

MissingPolicy missing_policy_from_name(std::string_view name) {
  if (name == "drop-day" || name == "drop") return MissingPolicy::DropDay;
  if (name == "forward-fill" || name == "ffill") return MissingPolicy::ForwardFill;
  throw ConfigError("unknown missing-data policy '" + std::string(name) + "'");
}

const char* missing_policy_name(MissingPolicy p) {
  return p == MissingPolicy::DropDay ? "drop-day" : "forward-fill";
}

void YieldPanel::validate() const {
  const auto n = dates.size();
  if (y1.size() != n || y10.size() != n || recession.size() != n) {
    throw DataError("panel columns have unequal lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && !(dates[i - 1] < dates[i])) {
      throw DataError("panel dates not strictly increasing at " + format_date(dates[i]));
    }
    if (!std::isfinite(y1[i]) || !std::isfinite(y10[i])) {
      throw DataError("panel has a missing or non-finite yield at " + format_date(dates[i]));
    }
    if (recession[i] > 1) throw DataError("panel recession flag not binary");
  }
}

DatedSeries parse_fred_csv(std::string_view text, std::string id) {
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw DataError("no data rows");
  DatedSeries series;
  const auto header = split(lines[0].second, ',');
  series.id = !id.empty() ? std::move(id) : (header.size() > 1 ? std::string(header[1]) : "");
  series.points.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [number, line] = lines[i];
    const auto fields = split(line, ',');
    const auto where = " (line " + std::to_string(number) + ")";
    if (fields.size() != 2) throw DataError("expected 'date,value'" + where);
    Date d;
    try {
      d = parse_date(fields[0]);
    } catch (const DataError& e) {
      throw DataError(e.what() + where);
    }
    std::optional<double> value;
    if (!is_missing_marker(fields[1])) {
      value = parse_double(fields[1]);
      if (!value || !std::isfinite(*value)) {
        throw DataError("non-numeric value '" + std::string(fields[1]) + "'" + where);
      }
    }
    if (!series.points.empty() && !(series.points.back().date < d)) {
      throw DataError("dates out of order or duplicated at " + format_date(d) + where);
    }
    series.points.push_back({d, value});
  }
  return series;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

DatedSeries read_fred_csv(const std::filesystem::path& path) {
  return parse_fred_csv(read_text_file(path), path.stem().string());
}

namespace {

// Walks a series forward in date order, answering "value on day d" and "last
// quoted value at or before d".
class SeriesCursor {
 public:
  explicit SeriesCursor(const DatedSeries& s) : s_(s) {}

  void advance_to(Date d) {
    has_exact_ = false;
    while (i_ < s_.points.size() && s_.points[i_].date <= d) {
      const auto& p = s_.points[i_];
      if (p.value) {
        last_ = *p.value;
        has_last_ = true;
        if (p.date == d) {
          exact_ = *p.value;
          has_exact_ = true;
        }
      }
      ++i_;
    }
  }
  std::optional<double> exact() const {
    return has_exact_ ? std::optional<double>(exact_) : std::nullopt;
  }
  std::optional<double> last() const {
    return has_last_ ? std::optional<double>(last_) : std::nullopt;
  }

 private:
  const DatedSeries& s_;
  std::size_t i_ = 0;
  bool has_exact_ = false;
  bool has_last_ = false;
  double exact_ = 0.0;
  double last_ = 0.0;
};

}  // namespace

YieldPanel align_panel(const DatedSeries& y1, const DatedSeries& y10, const DatedSeries& rec,
                       MissingPolicy policy) {
  for (const auto* s : {&y1, &y10, &rec}) {
    if (s->points.empty()) throw DataError("series '" + s->id + "' is empty");
  }
  const Date start = std::max({y1.points.front().date, y10.points.front().date,
                               rec.points.front().date});
  const Date end = std::min({y1.points.back().date, y10.points.back().date,
                             rec.points.back().date});
  if (end < start) throw DataError("series do not overlap");

  for (const auto& p : rec.points) {
    if (p.value && *p.value != 0.0 && *p.value != 1.0) {
      throw DataError("recession series is not binary at " + format_date(p.date));
    }
  }

  SeriesCursor c1(y1), c10(y10), cr(rec);
  YieldPanel panel;
  for (Date d = start; d <= end; d += chr::days{1}) {
    if (!is_weekday(d)) continue;
    c1.advance_to(d);
    c10.advance_to(d);
    cr.advance_to(d);
    const auto r = cr.exact();
    if (!r) continue;
    std::optional<double> a = c1.exact(), b = c10.exact();
    if (policy == MissingPolicy::ForwardFill) {
      if (!a) a = c1.last();
      if (!b) b = c10.last();
    }
    if (!a || !b) continue;
    panel.dates.push_back(d);
    panel.y1.push_back(*a);
    panel.y10.push_back(*b);
    panel.recession.push_back(r.value_or(0.0) == 1.0 ? 1 : 0);
  }
  if (panel.empty()) throw DataError("no weekday in the common date range has complete data");
  return panel;
}

YieldPanel slice_period(const YieldPanel& panel, Date start, Date end) {
  if (end < start) throw ConfigError("slice_period: start after end");
  const auto lo = std::lower_bound(panel.dates.begin(), panel.dates.end(), start);
  const auto hi = std::upper_bound(panel.dates.begin(), panel.dates.end(), end);
  if (lo >= hi) {
    throw DataError("slice_period: no data between " + format_date(start) + " and " +
                    format_date(end));
  }
  const auto a = static_cast<std::size_t>(lo - panel.dates.begin());
  const auto b = static_cast<std::size_t>(hi - panel.dates.begin());
  YieldPanel out;
  out.dates.assign(panel.dates.begin() + a, panel.dates.begin() + b);
  out.y1.assign(panel.y1.begin() + a, panel.y1.begin() + b);
  out.y10.assign(panel.y10.begin() + a, panel.y10.begin() + b);
  out.recession.assign(panel.recession.begin() + a, panel.recession.begin() + b);
  return out;
}

std::size_t count_recession_episodes(const YieldPanel& panel) {
  std::size_t episodes = 0;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (panel.recession[i] && (i == 0 || !panel.recession[i - 1])) ++episodes;
  }
  return episodes;
}

std::string panel_to_csv(const YieldPanel& panel) {
  std::string out = "date,y1,y10,recession\n";
  out.reserve(panel.size() * 32);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    out += format_date(panel.dates[i]);
    out += ',';
    out += format_double(panel.y1[i]);
    out += ',';
    out += format_double(panel.y10[i]);
    out += ',';
    out += panel.recession[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

YieldPanel panel_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw DataError("panel CSV is empty");
  if (lines[0].second != "date,y1,y10,recession") {
    throw DataError("panel CSV header must be 'date,y1,y10,recession'");
  }
  YieldPanel p;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [number, line] = lines[i];
    const auto f = split(line, ',');
    const auto where = " (line " + std::to_string(number) + ")";
    if (f.size() != 4) throw DataError("expected 4 fields" + where);
    const auto a = parse_double(f[1]);
    const auto b = parse_double(f[2]);
    if (!a || !b) throw DataError("non-numeric yield" + where);
    if (f[3] != "0" && f[3] != "1") throw DataError("recession flag must be 0 or 1" + where);
    p.dates.push_back(parse_date(f[0]));
    p.y1.push_back(*a);
    p.y10.push_back(*b);
    p.recession.push_back(f[3] == "1" ? 1 : 0);
  }
  p.validate();
  return p;
}

void write_panel(const YieldPanel& panel, const std::filesystem::path& path) {
  write_text_file(path, panel_to_csv(panel));
}

YieldPanel read_panel(const std::filesystem::path& path) {
  return panel_from_csv(read_text_file(path));
}

}  // namespace ygan::ingest
