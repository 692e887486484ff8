#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "fwmkv/torus.hpp"

namespace fwmkv {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// A draw is a pure function of (key, counter), so streams keyed by
/// (seed, particle, step) are reproducible under any thread schedule.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Uniform in (0, 1], 53 random bits.
inline double uniform_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> normal_pair(const Philox4x32::Counter& block) {
  const double u1 = uniform_open_closed(block[0], block[1]);
  const double u2 = uniform_open_closed(block[2], block[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = kTwoPi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

/// One component of normal_pair without computing the other.
inline double normal_component(const Philox4x32::Counter& block, int which) {
  const double u1 = uniform_open_closed(block[0], block[1]);
  const double u2 = uniform_open_closed(block[2], block[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return which == 0 ? r * std::cos(kTwoPi * u2) : r * std::sin(kTwoPi * u2);
}

/// Mixes a seed with a stream tag so that distinct uses of one user seed do not collide.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Keyed counter-mode stream: the i-th draw of stream (key, lane) is fixed.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t seed, std::uint64_t lane = 0)
      : key_(Philox4x32::key_from_seed(seed)), lane_(lane) {}

  Philox4x32::Counter block(std::uint64_t index) const {
    return Philox4x32::generate({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                 static_cast<std::uint32_t>(lane_), static_cast<std::uint32_t>(lane_ >> 32)},
                                key_);
  }

  double uniform(std::uint64_t index) const {
    const auto b = block(index);
    return uniform_open_closed(b[0], b[1]) - 0x1.0p-53;  // [0, 1)
  }

 private:
  Philox4x32::Key key_;
  std::uint64_t lane_;
};

/// Sequential convenience wrapper around CounterStream for test-harness style generation.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t lane = 0) : stream_(seed, lane) {}

  double uniform() { return stream_.uniform(next_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_pair(stream_.block(next_++))[0]; }
  std::uint64_t index(std::uint64_t n) {
    auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

 private:
  CounterStream stream_;
  std::uint64_t next_ = 0;
};

}  // namespace fwmkv
