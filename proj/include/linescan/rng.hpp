#pragma once

#include <cstdint>
#include <random>

namespace linescan::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream identifiers keep independent random uses of one seed apart.
enum class Stream : std::uint64_t {
  rays = 1,
  sensor_noise = 2,
  speckle = 3,
  frame = 4,
  trace = 5,
};

/// Counter-based seed for (seed, stream, counter). Deriving every per-pixel
/// generator this way makes serial and parallel renders bit-identical.
inline constexpr std::uint64_t derive(std::uint64_t seed, Stream stream, std::uint64_t counter) {
  return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) << 56)) + counter);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace linescan::rng
