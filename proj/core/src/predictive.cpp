#include "gmekit/predictive.hpp"

#include <cmath>

#include "gmekit/errors.hpp"
#include "gmekit/util.hpp"

namespace gmekit {

namespace {

double gaussian_sigma2(const Theta& theta, const PredictiveFamily& fam) {
  if (!theta.v.empty()) return theta.v[0];
  if (fam.sigma2) return *fam.sigma2;
  throw ConfigError("gaussian predictive needs sigma^2 (theta.v[0] or family.sigma2)");
}

double require_count(double y, const char* what) {
  const double r = std::round(y);
  if (!(std::abs(y - r) <= 1e-9) || r < 0.0)
    throw ConfigError(std::string(what) + " outcomes live on the non-negative integers; got " +
                      std::to_string(y));
  return r;
}

}  // namespace

double ippd_density(double y, const Theta& theta, double e_value, const PredictiveFamily& fam) {
  switch (fam.family) {
    case Family::GaussianIdentity: {
      const double s2 = gaussian_sigma2(theta, fam);
      if (!(s2 > 0.0)) throw NumericError("gaussian predictive has non-positive sigma^2");
      const double d = y - e_value;
      return std::exp(-0.5 * d * d / s2) / std::sqrt(2.0 * M_PI * s2);
    }
    case Family::PoissonLog: {
      if (!(e_value > 0.0)) throw NumericError("poisson predictive mean is not positive");
      const double k = require_count(y, "poisson");
      return std::exp(-e_value + k * std::log(e_value) - std::lgamma(k + 1.0));
    }
    case Family::BinomialLogit: {
      const double t = fam.trials;
      if (!(t >= 1.0)) throw ConfigError("binomial predictive needs trials >= 1");
      const double k = require_count(y, "binomial");
      if (k > t) throw ConfigError("binomial outcome exceeds the trial count");
      const double p = e_value / t;
      if (!(p > 0.0 && p < 1.0))
        throw NumericError("binomial predictive mean lies outside (0, trials)");
      const double logc =
          std::lgamma(t + 1.0) - std::lgamma(k + 1.0) - std::lgamma(t - k + 1.0);
      return std::exp(logc + k * std::log(p) + (t - k) * std::log1p(-p));
    }
  }
  throw ConfigError("bad family enum");
}

PredictiveCurve marginal_predictive_curve(std::span<const double> y_grid,
                                          const ThetaEnsemble& ensemble,
                                          const std::function<double(const Theta&)>& e_of_theta,
                                          const PredictiveFamily& fam,
                                          const EstimateOptions& opt) {
  if (ensemble.draws.empty()) throw ConfigError("ensemble has no draws");
  if (y_grid.empty()) throw ConfigError("empty outcome grid");

  // The expectation is a fixed function of the draw, so evaluate it once per
  // draw and validate the domain with the draw index attached.
  std::vector<double> e(ensemble.draws.size());
  for (std::size_t d = 0; d < ensemble.draws.size(); ++d) {
    e[d] = e_of_theta(ensemble.draws[d]);
    if (!std::isfinite(e[d]))
      throw NumericError("expectation is non-finite at draw " + std::to_string(d));
    if (fam.family == Family::PoissonLog && !(e[d] > 0.0))
      throw NumericError("poisson predictive mean is not positive at draw " + std::to_string(d));
    if (fam.family == Family::BinomialLogit && !(e[d] > 0.0 && e[d] < fam.trials))
      throw NumericError("binomial predictive mean leaves (0, trials) at draw " +
                         std::to_string(d));
  }

  PredictiveCurve out;
  out.y.assign(y_grid.begin(), y_grid.end());
  std::vector<double> samples(ensemble.draws.size());
  for (double y : y_grid) {
    for (std::size_t d = 0; d < ensemble.draws.size(); ++d)
      samples[d] = ippd_density(y, ensemble.draws[d], e[d], fam);
    out.point.push_back(pairwise_mean(samples));
    out.regions.push_back(opt.kind == RegionKind::Hdr
                              ? hdr_region(samples, opt.alpha, opt.shape)
                              : equal_tailed_region(samples, opt.alpha));
  }
  return out;
}

}  // namespace gmekit
