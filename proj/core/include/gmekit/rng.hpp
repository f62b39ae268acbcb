#pragma once

#include <cstdint>

namespace gmekit {

// Counter-based generator: every variate is a pure function of
// (seed, stream, counter), so draws are bit-reproducible no matter how the
// work is scheduled or split across threads.
namespace rng {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return mix64(mix64(mix64(seed) ^ stream) ^ counter);
}

// Uniform on (0,1]; never returns 0, so log(u) is always finite.
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t bits = key(seed, stream, counter) >> 11;  // 53 bits
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller on counters (2*counter, 2*counter+1).
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

// Index in [0, n). Uses rejection to avoid modulo bias.
std::uint64_t index(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter, std::uint64_t n);

}  // namespace rng
}  // namespace gmekit
