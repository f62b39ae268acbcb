#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gmekit {

// Pairwise summation. Deterministic for a fixed element order and numerically
// stable enough that accumulation order never becomes a reproducibility hazard.
double pairwise_sum(std::span<const double> v);

inline double pairwise_mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v);  // denominator n-1

std::vector<double> linspace(double from, double to, std::size_t count);

}  // namespace gmekit
