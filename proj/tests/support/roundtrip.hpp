// SPDX-License-Identifier: Apache-2.0
//
// Save -> load -> predict checks for every checkpoint kind, shared by the
// unit tests and the acceptance binary.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ygan::testing {

struct RoundTripResult {
  std::string kind;
  bool predictions_equal = false;  // bitwise, on a batch of inputs
  bool parameters_equal = false;
  bool resave_identical = false;   // re-saving the loaded model gives the same bytes
};

/// Trains (briefly) one model of each kind and round-trips it through `dir`.
std::vector<RoundTripResult> checkpoint_round_trips(const std::filesystem::path& dir);

}  // namespace ygan::testing
