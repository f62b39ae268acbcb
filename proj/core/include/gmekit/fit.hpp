#pragma once

#include <vector>

#include "gmekit/dataset.hpp"
#include "gmekit/model.hpp"

namespace gmekit {

struct FitOptions {
  int max_iter = 50;
  double tol = 1e-10;  // absolute change in deviance
};

struct FitResult {
  Theta theta;
  std::vector<std::vector<double>> cov;  // over beta
  double deviance = 0.0;
  int iterations = 0;
};

// Intercept + all encoded main effects + the schema's declared interactions,
// coefficients indexed in that order.
ParametricModel default_terms_model(const RegressorSchema& schema, Family family);

// Gaussian by least squares, binomial/poisson by IRLS. Binomial uses
// y in [0,1] (successes / trials) with the trials column as weight.
// Non-convergence and separation raise NumericError with a diagnostic.
FitResult fit_model(const ParametricModel& model, const EncodedData& data,
                    const FitOptions& opt = {});

}  // namespace gmekit
