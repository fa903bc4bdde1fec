// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/toy.hpp"

#include <cmath>
#include <numbers>

#include "yieldgan/error.hpp"
#include "yieldgan/rng.hpp"

namespace ygan::toy {

sampling::SampleSet damped_sinusoids(std::size_t n, std::size_t T, std::uint64_t seed,
                                     double positive_rate) {
  if (n == 0 || T == 0) throw ConfigError("toy set needs n > 0 and T > 0");
  Rng rng(derive_seed(seed, "toy.sinusoids"));
  sampling::SampleSet set;
  set.n = n;
  set.T = T;
  set.F = 2;
  set.feature_names = {"y1", "y10"};
  set.attribute_schema = {sampling::kRecessionAttr};
  set.provenance = sampling::Provenance::Synthetic;
  set.features.resize(n * T * 2);
  set.attributes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = rng.uniform() < positive_rate;
    const double amp = rng.uniform(0.5, 1.5);
    const double decay = pos ? rng.uniform(0.05, 0.08) : rng.uniform(0.005, 0.02);
    const double period = rng.uniform(12.0, 24.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double level = pos ? rng.uniform(1.0, 2.0) : rng.uniform(3.0, 5.0);
    const double omega = 2.0 * std::numbers::pi / period;
    set.attributes[i] = pos ? 1.0 : 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double td = static_cast<double>(t);
      const double env = amp * std::exp(-decay * td);
      set.features[(i * T + t) * 2] = level + env * std::sin(omega * td + phase);
      set.features[(i * T + t) * 2 + 1] =
          level + 1.0 + 0.8 * env * std::sin(omega * td + phase - 0.5 * std::numbers::pi);
    }
  }
  return set;
}

}  // namespace ygan::toy
