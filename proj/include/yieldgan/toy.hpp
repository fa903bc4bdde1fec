// SPDX-License-Identifier: Apache-2.0
//
// Seeded toy corpora for desk-scale benchmarks.
#pragma once

#include <cstddef>
#include <cstdint>

#include "yieldgan/sampling.hpp"

namespace ygan::toy {

/// n two-feature damped sinusoids of length T with a binary "recession"
/// attribute (probability `positive_rate`).  Positive samples decay faster
/// and sit at a lower level; the second feature lags the first by a quarter
/// period and is offset upward.
sampling::SampleSet damped_sinusoids(std::size_t n, std::size_t T, std::uint64_t seed,
                                     double positive_rate = 0.3);

}  // namespace ygan::toy
