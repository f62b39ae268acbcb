#include "gmekit/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "gmekit/errors.hpp"
#include "gmekit/util.hpp"

namespace gmekit {

double Region::total_width() const {
  double w = 0.0;
  for (const Interval& iv : intervals) w += iv.width();
  return w;
}

namespace {

std::vector<double> sorted_copy(std::span<const double> samples, double alpha) {
  if (samples.empty()) throw ConfigError("region needs at least one sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly in (0,1)");
  for (double s : samples)
    if (!std::isfinite(s)) throw NumericError("region input contains a non-finite sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  return s;
}

// ceil((1-alpha) n) without float fencepost trouble at representable alphas.
std::size_t coverage_count(std::size_t n, double alpha) {
  const double raw = (1.0 - alpha) * static_cast<double>(n);
  auto m = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(m, 1, n);
}

}  // namespace

Region hdr_region(std::span<const double> samples, double alpha, HdrShape shape) {
  const std::vector<double> s = sorted_copy(samples, alpha);
  const std::size_t n = s.size();
  const std::size_t m = coverage_count(n, alpha);
  Region out;
  out.kind = RegionKind::Hdr;
  out.alpha = alpha;

  if (shape == HdrShape::Unimodal || n < 3) {
    // Shortest window of m consecutive order statistics.
    std::size_t best = 0;
    double best_w = s[m - 1] - s[0];
    for (std::size_t i = 1; i + m <= n; ++i) {
      const double w = s[i + m - 1] - s[i];
      if (w < best_w) {
        best_w = w;
        best = i;
      }
    }
    out.intervals = {{s[best], s[best + m - 1]}};
    return out;
  }

  // Multimodal: keep the m KDE-densest samples; runs of kept samples in sorted
  // order become the intervals.
  const double sd = sample_sd(s);
  const double iqr = s[(3 * n) / 4] - s[n / 4];
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (spread <= 0.0) {
    out.intervals = {{s.front(), s.back()}};
    return out;
  }
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  std::vector<double> dens(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = (s[i] - s[j]) / h;
      acc += std::exp(-0.5 * u * u);
    }
    dens[i] = acc;  // common 1/(nh sqrt(2 pi)) factor cancels in the ranking
  }
  std::vector<double> ranked = dens;
  std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n - m),
                   ranked.end());
  const double threshold = ranked[n - m];

  std::vector<bool> keep(n, false);
  for (std::size_t i = 0; i < n; ++i) keep[i] = dens[i] >= threshold;
  for (std::size_t i = 0; i < n;) {
    if (!keep[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && keep[j + 1]) ++j;
    out.intervals.push_back({s[i], s[j]});
    i = j + 1;
  }
  return out;
}

Region equal_tailed_region(std::span<const double> samples, double alpha) {
  const std::vector<double> s = sorted_copy(samples, alpha);
  const std::size_t n = s.size();
  auto k_lo = static_cast<std::size_t>(std::floor(alpha / 2.0 * static_cast<double>(n)));
  if (2 * k_lo >= n) k_lo = (n - 1) / 2;
  Region out;
  out.kind = RegionKind::EqualTailed;
  out.alpha = alpha;
  out.intervals = {{s[k_lo], s[n - 1 - k_lo]}};
  return out;
}

QuantityResult estimate(const std::function<std::vector<double>(const Theta&)>& quantity,
                        const ThetaEnsemble& ensemble, const EstimateOptions& opt) {
  if (ensemble.draws.empty()) throw ConfigError("ensemble has no draws");
  std::vector<std::vector<double>> per_component;  // [component][draw]
  for (std::size_t d = 0; d < ensemble.draws.size(); ++d) {
    const std::vector<double> v = quantity(ensemble.draws[d]);
    if (d == 0) per_component.assign(v.size(), {});
    if (v.size() != per_component.size())
      throw NumericError("quantity returned inconsistent component counts across draws");
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (!std::isfinite(v[c]))
        throw NumericError("quantity evaluated to a non-finite value at draw " +
                           std::to_string(d));
      per_component[c].push_back(v[c]);
    }
  }

  QuantityResult out;
  for (auto& samples : per_component) {
    out.point.push_back(pairwise_mean(samples));
    out.regions.push_back(opt.kind == RegionKind::Hdr
                              ? hdr_region(samples, opt.alpha, opt.shape)
                              : equal_tailed_region(samples, opt.alpha));
    if (opt.keep_draws) out.draw_values.push_back(std::move(samples));
  }
  return out;
}

CurveBand curve_band(const std::function<double(const Theta&, double)>& value_at,
                     std::span<const double> xs, const ThetaEnsemble& ensemble,
                     const EstimateOptions& opt) {
  if (ensemble.draws.empty()) throw ConfigError("ensemble has no draws");
  CurveBand out;
  out.xs.assign(xs.begin(), xs.end());
  std::vector<double> samples(ensemble.draws.size());
  for (double x : xs) {
    for (std::size_t d = 0; d < ensemble.draws.size(); ++d) {
      samples[d] = value_at(ensemble.draws[d], x);
      if (!std::isfinite(samples[d]))
        throw NumericError("curve value is non-finite at draw " + std::to_string(d));
    }
    out.point.push_back(pairwise_mean(samples));
    out.regions.push_back(opt.kind == RegionKind::Hdr
                              ? hdr_region(samples, opt.alpha, opt.shape)
                              : equal_tailed_region(samples, opt.alpha));
  }
  return out;
}

}  // namespace gmekit
