#include "gmekit/util.hpp"

#include <cmath>

#include "gmekit/errors.hpp"

namespace gmekit {

namespace {
double pairwise_impl(const double* v, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_impl(v, half) + pairwise_impl(v + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> v) { return pairwise_impl(v.data(), v.size()); }

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) throw NumericError("sample_sd needs at least two values");
  const double m = pairwise_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::vector<double> linspace(double from, double to, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {from};
  std::vector<double> out(count);
  const double step = (to - from) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = from + step * static_cast<double>(i);
  out.back() = to;
  return out;
}

}  // namespace gmekit
