// SPDX-License-Identifier: Apache-2.0
//
// Seeded random substreams for reproducible Monte Carlo runs. Every
// simulated link draws from its own substream derived from (master seed,
// domain, trial, link), so trials can run in parallel without shared
// generator state and a fixed configuration always reproduces the same
// realization, bit for bit.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace csifb {

/// splitmix64 finalizer; decorrelates structured seed inputs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent purposes a substream can be derived for. Keeping the
/// channel history, channel innovations and measurement noise on separate
/// streams means regenerating one never shifts the others.
enum class StreamDomain : std::uint64_t {
  channel_history = 1,
  channel_innovation = 2,
  measurement_noise = 3,
  generic = 4,
};

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  static RngStream derive(std::uint64_t master, StreamDomain domain,
                          std::uint64_t trial, std::uint64_t link) {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ static_cast<std::uint64_t>(domain));
    h = mix64(h ^ trial);
    h = mix64(h ^ link);
    return RngStream(h);
  }

  /// Uniform draw on the open interval (0, 1).
  double uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53; }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double gaussian() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(k_two_pi * uniform());
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_gaussian(double variance) {
    const double r = std::sqrt(-variance * std::log(uniform()));
    const double phi = k_two_pi * uniform();
    return {r * std::cos(phi), r * std::sin(phi)};
  }

 private:
  static constexpr double k_two_pi = 6.28318530717958647692528676655900577;
  std::mt19937_64 gen_;
};

}  // namespace csifb
