#pragma once

#include <cstdint>

#include "gmekit/dataset.hpp"

namespace gmekit {

// Deterministic synthetic study data used by the bundled example configs and
// the end-to-end golden tests. Purely simulated; the covariate mixes echo the
// shape of typical clinical and sports datasets but every number comes from
// the seeded generator below.

// Columns: race (4 levels), age, gender (2 levels), group (2 levels),
// prolonged_stay (binary outcome from a logistic data-generating process).
Dataset make_inpatient_synthetic(std::size_t n, std::uint64_t seed);

// Columns: skin_tone in [0,1], games, cards (counts), rate = cards/games.
// Cards are binomial per game with a log-linear rate in skin_tone, so gaussian
// (rate), poisson (cards, offset log games) and binomial (rate, trials games)
// fits target the same per-game rate.
Dataset make_redcard_synthetic(std::size_t n, std::uint64_t seed);

// Average per-game rate slope of the red-card generator over skin_tone in
// (0,1): p(1) - p(0) of the data-generating rate curve.
double redcard_true_slope();

}  // namespace gmekit
