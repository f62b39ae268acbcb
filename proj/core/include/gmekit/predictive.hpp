#pragma once

#include <functional>
#include <optional>
#include <span>

#include "gmekit/uncertainty.hpp"

namespace gmekit {

struct PredictiveFamily {
  Family family = Family::GaussianIdentity;
  double trials = 1.0;           // binomial number of trials
  std::optional<double> sigma2;  // gaussian fallback when theta.v is empty
};

// Density (or pmf) of the outcome under parameter theta with the location
// tied to an expectation value e: gaussian N(e, sigma^2(theta)), poisson
// Pois(e) on integers, binomial(trials, e / trials).
double ippd_density(double y, const Theta& theta, double e_value, const PredictiveFamily& fam);

struct PredictiveCurve {
  std::vector<double> y;
  std::vector<double> point;  // ensemble mean of the per-draw density at y
  std::vector<Region> regions;
};

// Individualized posterior-predictive overlay: for each y on the grid, the
// per-draw density at y with e evaluated per draw, summarized like any other
// ensemble quantity.
PredictiveCurve marginal_predictive_curve(std::span<const double> y_grid,
                                          const ThetaEnsemble& ensemble,
                                          const std::function<double(const Theta&)>& e_of_theta,
                                          const PredictiveFamily& fam,
                                          const EstimateOptions& opt = {});

}  // namespace gmekit
