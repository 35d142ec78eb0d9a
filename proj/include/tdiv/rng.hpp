#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tdiv {

// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// SplitMix64 generator with a Box-Muller normal sampler. Every draw is a
// fixed function of the seed, so streams reproduce across platforms.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a logarithm argument.
  double uniform_open_low() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

  // Standard normal. Draws come in Box-Muller pairs; the sine branch is
  // cached and returned by the following call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open_low()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// One standard normal keyed by (seed, frame, element). The value does not
// depend on the order in which elements are visited.
inline double keyed_normal(std::uint64_t seed, std::uint64_t frame, std::uint64_t element) {
  SplitMix64 rng(seed ^ mix64((frame << 32) ^ element));
  const double radius = std::sqrt(-2.0 * std::log(rng.uniform_open_low()));
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  return radius * std::cos(angle);
}

}  // namespace tdiv
