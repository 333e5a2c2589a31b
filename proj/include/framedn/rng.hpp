#pragma once

#include <cmath>
#include <cstdint>

#include "framedn/types.hpp"

// Counter-based random number generation. Every draw is a pure function of
// (key, counter), so streams can be split across replicates and threads
// without shared state, and a given (key, counter) pair always yields the
// same value on every platform with IEEE doubles.
namespace framedn::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Word at position `counter` in the stream identified by `key`.
inline std::uint64_t at(std::uint64_t key, std::uint64_t counter) {
  return mix(key + kGolden * (counter + 1));
}

/// Key for sub-stream `index` of the stream identified by `key`.
/// Used to give each Monte-Carlo replicate its own stream.
inline std::uint64_t derive(std::uint64_t key, std::uint64_t index) {
  return at(key ^ 0xD1B54A32D192ED03ull, index);
}

/// Fold an extra value into a stream key (order-sensitive).
inline std::uint64_t combine(std::uint64_t key, std::uint64_t value) {
  return mix(key ^ (value + kGolden + (key << 6) + (key >> 2)));
}

/// FNV-1a over a string, for keying streams by signal names and the like.
inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Uniform draw in (0, 1]. The +1 keeps log() finite.
inline double uniform(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>((at(key, counter) >> 11) + 1) * 0x1p-53;
}

/// Standard normal draw at position `i` of the stream, via Box-Muller.
/// Positions 2k and 2k+1 share the two underlying uniforms.
inline double gaussian(std::uint64_t key, std::uint64_t i) {
  const std::uint64_t pair = i / 2;
  const double u1 = uniform(key, 2 * pair);
  const double u2 = uniform(key, 2 * pair + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  return (i % 2 == 0) ? r * std::cos(a) : r * std::sin(a);
}

/// Fill `out` with i.i.d. standard normals from the stream.
inline void fill_gaussian(std::uint64_t key, VecX& out) {
  const Index n = out.size();
  for (Index i = 0; i + 1 < n; i += 2) {
    const double u1 = uniform(key, static_cast<std::uint64_t>(i));
    const double u2 = uniform(key, static_cast<std::uint64_t>(i) + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    out[i] = r * std::cos(a);
    out[i + 1] = r * std::sin(a);
  }
  if (n % 2 == 1) {
    out[n - 1] = gaussian(key, static_cast<std::uint64_t>(n) - 1);
  }
}

}  // namespace framedn::rng
