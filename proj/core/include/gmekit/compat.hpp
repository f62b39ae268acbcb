#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gmekit/quantity.hpp"

namespace gmekit {
namespace compat {

// Named method specializations from the applied literature. Each routes
// through the measure-weighted machinery with the method's implied measure
// choices and is cross-checked against the literal textbook formula computed
// independently; a disagreement beyond kCompatTol raises NumericError.
inline constexpr double kCompatTol = 1e-8;

enum class ClassicKind { AAP, AME, APR, MER, APM, MEM };

// "Mean" of a categorical covariate for APM/MEM: the default spreads mass over
// the categories by observed share; Strict refuses categorical covariates.
enum class CategoricalMeanPolicy { Proportions, Strict };

struct ClassicOptions {
  std::vector<double> x_rep;  // APR/MER representative point, full encoded vector
  CategoricalMeanPolicy mean_policy = CategoricalMeanPolicy::Proportions;
  double offset = 0.0;
};

// AAP/AME average over the observed rows (AME keeps the covariates' joint law
// conditional on the interest for metric interest, and their marginal law for
// categorical interest). APR/MER evaluate at a representative point, APM/MEM
// at the sample means.
std::vector<double> classic(const QuantityEngine& engine, const Theta& theta, ClassicKind kind,
                            const ClassicOptions& opt = {});

// Average predictive comparison between two interest levels, per unit of
// interest: equals the uniform-measure effect on (u_lo, u_hi) with covariates
// at their marginal law.
double predictive_comparison(const QuantityEngine& engine, const Theta& theta,
                             double u_lo, double u_hi);

struct KaufmanResult {
  double partial;  // b_j * P (1 - P) at the reference point
  double delta_p;  // half-unit-window probability change at the reference point
};

// Logistic-only pointwise summaries at a reference covariate vector; delta_p
// equals the uniform effect on (x_I - 1/2, x_I + 1/2) with Dirac covariates.
KaufmanResult kaufman(const QuantityEngine& engine, const Theta& theta,
                      std::span<const double> x_ref);

struct AlePoint {
  double z = 0.0;
  double value = 0.0;
};

// Uncentred accumulated-local-effects curve: conditional-law effect on
// (min supp, z) scaled back to integral form.
std::vector<AlePoint> ale_curve(const QuantityEngine& engine, const Theta& theta,
                                std::span<const double> z_grid);

// Forward-difference average effects over the observed interest values.
// Metric interest needs a step width h; categorical interest averages the
// contrast back to the reference over the non-reference rows.
double fame(const QuantityEngine& engine, const Theta& theta,
            std::optional<double> h = std::nullopt);

}  // namespace compat
}  // namespace gmekit
