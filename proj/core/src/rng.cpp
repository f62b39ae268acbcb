#include "gmekit/rng.hpp"

#include <cmath>
#include <numbers>

namespace gmekit {
namespace rng {

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const double u1 = uniform(seed, stream, 2 * counter);
  const double u2 = uniform(seed, stream, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t index(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                    std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t sub = 0;
  for (;;) {
    const std::uint64_t r = key(seed, stream, counter ^ (sub << 48));
    if (r < limit) return r % n;
    ++sub;
  }
}

}  // namespace rng
}  // namespace gmekit
