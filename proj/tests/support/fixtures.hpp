// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic stand-ins for the FRED exports used by tests: a weekday
// calendar with mean-reverting 1- and 10-year yields, an inverted curve ahead
// of each recession, and the NBER recession dates as a daily indicator.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "yieldgan/ingest.hpp"
#include "yieldgan/rng.hpp"

namespace ygan::testing {

struct FredTexts {
  std::string y1;
  std::string y10;
  std::string rec;
};

struct FixtureOptions {
  std::string start = "1962-01-02";
  std::string end = "2023-01-31";
  double missing_rate = 0.0;  // fraction of weekday yields written as "."
  std::uint64_t seed = 7;
};

/// NBER recession spans (first and last month day) as YYYY-MM-DD pairs.
const std::vector<std::pair<std::string, std::string>>& nber_recessions();

/// Weekday calendar panel without gaps.
ingest::YieldPanel synthetic_panel(const FixtureOptions& opt = {});

/// FRED-format CSVs for the same data: yields on weekdays (with "." for
/// missing quotes at the configured rate), recession flag on every day.
FredTexts synthetic_fred(const FixtureOptions& opt = {});

/// Number of weekdays in [start, end].
std::size_t weekday_count(const std::string& start, const std::string& end);

/// A weekday panel of exactly `days` rows starting at `start`, deterministic
/// in the seed.
ingest::YieldPanel calendar_panel(const std::string& start, std::size_t days, std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::string temp_dir(const std::string& tag);

}  // namespace ygan::testing
