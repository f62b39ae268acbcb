#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmekit/model.hpp"

namespace gmekit {

inline constexpr std::size_t kDefaultDrawCount = 4000;
inline constexpr double kDefaultAlpha = 0.05;

struct ThetaEnsemble {
  std::vector<Theta> draws;
  std::uint64_t seed = 0;
  std::string provenance;            // "normal-approximation" or "draws"
  bool covariance_adjusted = false;  // eigenvalue clip was needed
};

// Draws beta ~ N(theta_hat.beta, cov) with a counter-based generator; v is
// carried over from theta_hat unchanged. A non-PD covariance is repaired by
// clipping eigenvalues at 1e-12 * max eigenvalue (flagged in the result).
ThetaEnsemble make_ensemble_normal(const Theta& theta_hat,
                                   const std::vector<std::vector<double>>& cov,
                                   std::size_t n_draws, std::uint64_t seed);

ThetaEnsemble ensemble_from_draws(std::vector<Theta> draws, std::string provenance = "draws");

// Draws file: CSV with one column per beta component (then v components),
// one row per draw.
ThetaEnsemble read_draws_csv(const std::string& path, int beta_len, int v_len);

}  // namespace gmekit
