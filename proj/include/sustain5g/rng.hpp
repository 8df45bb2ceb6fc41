#pragma once

#include <cmath>
#include <cstdint>

namespace sustain5g {

// splitmix64: tiny, fast, well-distributed, trivially seedable. Good enough
// for Monte Carlo validation work; not a cryptographic generator.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Exponential inter-arrival time for the given rate.
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Uniform integer in [0, n) via 128-bit multiply (bias < 2^-64 * n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Decoupled sub-stream seeds: one master seed fans out per purpose and per
// trial/lane index, so changing how one stream is consumed (say Q) never
// shifts the draws of another. This is what makes common-random-numbers
// comparisons exact.
enum class RngPurpose : std::uint64_t {
  PoissonTrial = 1,
  AttachTrial = 2,
  Arrivals = 3,
  KeyUpdates = 4,
  VehicleAttrs = 5,
  ConnectivityMc = 6,
  RootKey = 7,
};

inline std::uint64_t substream_seed(std::uint64_t seed, RngPurpose purpose,
                                    std::uint64_t index = 0) {
  const std::uint64_t p =
      detail::mix64(seed ^ (static_cast<std::uint64_t>(purpose) *
                            0xd1b54a32d192ed03ULL));
  return detail::mix64(p ^ (index * 0x2545f4914f6cdd1dULL));
}

}  // namespace sustain5g
