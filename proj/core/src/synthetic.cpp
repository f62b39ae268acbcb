#include "gmekit/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "gmekit/errors.hpp"
#include "gmekit/rng.hpp"

namespace gmekit {

namespace {

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("number formatting failed");
  return std::string(buf, p);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Red-card generating process: per-game probability exp(kC0 + kC1 * tone).
constexpr double kC0 = -3.5065578973199818;  // log(0.03)
constexpr double kC1 = 0.8;

}  // namespace

Dataset make_inpatient_synthetic(std::size_t n, std::uint64_t seed) {
  Dataset d;
  d.names = {"race", "age", "gender", "group", "prolonged_stay"};
  d.rows.reserve(n);
  static const char* kRace[] = {"white", "black", "hispanic", "other"};
  static const double kRaceCum[] = {0.55, 0.75, 0.90, 1.0};

  for (std::size_t i = 0; i < n; ++i) {
    const double ur = rng::uniform(seed, 0, i);
    int race = 0;
    while (race < 3 && ur > kRaceCum[race]) ++race;
    // One-decimal ages give repeated values, which exact-match conditioning
    // needs to be meaningful.
    const double age = std::round(10.0 * (18.0 + 62.0 * rng::uniform(seed, 1, i))) / 10.0;
    const bool male = rng::uniform(seed, 2, i) < 0.5;
    const bool treat = rng::uniform(seed, 3, i) < 0.5;

    static const double kRaceEff[] = {0.0, 0.4, 0.25, 0.1};
    const double eta = -2.2 + 0.025 * (age - 50.0) + kRaceEff[race] + (male ? 0.3 : 0.0) +
                       (treat ? 0.5 : 0.0) + (male ? 0.008 * (age - 50.0) : 0.0);
    const bool stay = rng::uniform(seed, 4, i) < sigmoid(eta);

    d.rows.push_back({kRace[race], num(age), male ? "male" : "female",
                      treat ? "treatment" : "control", stay ? "1" : "0"});
  }
  return d;
}

Dataset make_redcard_synthetic(std::size_t n, std::uint64_t seed) {
  Dataset d;
  d.names = {"skin_tone", "games", "cards", "rate"};
  d.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tone = std::round(100.0 * rng::uniform(seed, 0, i)) / 100.0;
    const auto games = 1 + rng::index(seed, 1, i, 50);
    const double p = std::exp(kC0 + kC1 * tone);
    std::uint64_t cards = 0;
    for (std::uint64_t g = 0; g < games; ++g)
      if (rng::uniform(seed, 2, i * 64 + g) < p) ++cards;
    const double rate = static_cast<double>(cards) / static_cast<double>(games);
    d.rows.push_back({num(tone), std::to_string(games), std::to_string(cards), num(rate)});
  }
  return d;
}

double redcard_true_slope() { return std::exp(kC0 + kC1) - std::exp(kC0); }

}  // namespace gmekit
