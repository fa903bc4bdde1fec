// SPDX-License-Identifier: Apache-2.0
//
// FRED CSV ingestion and weekday alignment of the 1-year yield, 10-year yield
// and daily NBER recession indicator into a single panel.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ygan::ingest {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD.  Throws DataError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);
bool is_weekday(Date d);

struct DatedPoint {
  Date date;
  std::optional<double> value;  // nullopt marks a missing observation
};

struct DatedSeries {
  std::string id;
  std::vector<DatedPoint> points;  // strictly increasing dates
};

/// Calendar-aligned daily panel.  All columns have equal length and dates are
/// strictly increasing weekdays.
struct YieldPanel {
  std::vector<Date> dates;
  std::vector<double> y1;
  std::vector<double> y10;
  std::vector<std::uint8_t> recession;

  std::size_t size() const { return dates.size(); }
  bool empty() const { return dates.empty(); }
  /// Throws DataError if an invariant is violated.
  void validate() const;
  bool operator==(const YieldPanel&) const = default;
};

enum class MissingPolicy {
  DropDay,      // both yields must be quoted on the day
  ForwardFill,  // carry the last quote forward
};

MissingPolicy missing_policy_from_name(std::string_view name);
const char* missing_policy_name(MissingPolicy p);

/// Parses a FRED export: one header row then `date,value` rows.  The value
/// field is missing when it is "." (classic FRED marker) or empty (current
/// fredgraph.csv exports).
DatedSeries parse_fred_csv(std::string_view text, std::string id = {});
DatedSeries read_fred_csv(const std::filesystem::path& path);

/// Weekdays in the intersection of the three series' date ranges, with
/// missing yields resolved by `policy`.  Days without a published recession
/// value are dropped.  Throws DataError for an empty intersection or a
/// recession value other than 0/1.
YieldPanel align_panel(const DatedSeries& y1, const DatedSeries& y10, const DatedSeries& rec,
                       MissingPolicy policy = MissingPolicy::DropDay);

/// Sub-panel with dates in [start, end].
YieldPanel slice_period(const YieldPanel& panel, Date start, Date end);

/// Number of maximal runs of recession days.
std::size_t count_recession_episodes(const YieldPanel& panel);

/// Canonical panel CSV `date,y1,y10,recession` (shortest round-trip floats).
std::string panel_to_csv(const YieldPanel& panel);
YieldPanel panel_from_csv(std::string_view text);
void write_panel(const YieldPanel& panel, const std::filesystem::path& path);
YieldPanel read_panel(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
/// Strict decimal parse of the whole field; nullopt on failure.
std::optional<double> parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ygan::ingest
