#pragma once

// Shared fixtures for the test drivers: deterministic pseudo-random schemas,
// models, datasets and measures, plus a high-order finite-difference helper.
// Everything routes through the counter generator so failures replay exactly.

#include <cstdint>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gmekit/dataset.hpp"
#include "gmekit/fit.hpp"
#include "gmekit/measure.hpp"
#include "gmekit/model.hpp"
#include "gmekit/quantity.hpp"
#include "gmekit/rng.hpp"
#include "gmekit/schema.hpp"

namespace testkit {

inline std::string repo_path(const std::string& rel) {
  return std::string(GMEKIT_REPO_DIR) + "/" + rel;
}

struct Rand {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::uint64_t c = 0;

  double u() { return gmekit::rng::uniform(seed, stream, c++); }
  // Separate stream: the normal generator consumes two sub-counters per call.
  double gauss() { return gmekit::rng::normal(seed, stream ^ 0x517cc1b727220a95ULL, c++); }
  double range(double a, double b) { return a + (b - a) * u(); }
  std::uint64_t index(std::uint64_t n) { return gmekit::rng::index(seed, stream, c++, n); }
  int irange(int a, int b) {  // inclusive bounds
    return a + static_cast<int>(index(static_cast<std::uint64_t>(b - a + 1)));
  }
  bool coin(double p = 0.5) { return u() < p; }
};

inline gmekit::ColumnSpec metric_col(const std::string& name) {
  gmekit::ColumnSpec c;
  c.name = name;
  c.kind = gmekit::ColumnKind::Metric;
  return c;
}

inline gmekit::ColumnSpec cat_col(const std::string& name, int n_levels) {
  gmekit::ColumnSpec c;
  c.name = name;
  c.kind = gmekit::ColumnKind::Categorical;
  for (int i = 0; i < n_levels; ++i) c.levels.push_back("l" + std::to_string(i));
  c.reference = "l0";
  return c;
}

struct LabModel {
  gmekit::RegressorSchema schema;
  gmekit::ParametricModel model;
  gmekit::Theta theta;
  gmekit::EncodedData data;
};

// Random raw records for a schema; metric cells drawn from [lo,hi], or from a
// per-column 4-value grid when on_grid is set (gives exact-match conditioning
// something to condition on).
inline std::vector<std::vector<gmekit::RawValue>> random_records(
    Rand& r, const gmekit::RegressorSchema& schema, std::size_t n, bool on_grid = false,
    double lo = 0.0, double hi = 2.0) {
  const auto& cols = schema.spec().columns;
  std::vector<std::vector<double>> grids(cols.size());
  if (on_grid) {
    for (std::size_t j = 0; j < cols.size(); ++j)
      for (int k = 0; k < 4; ++k) grids[j].push_back(r.range(lo, hi));
  }
  std::vector<std::vector<gmekit::RawValue>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<gmekit::RawValue> rec;
    rec.reserve(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].kind == gmekit::ColumnKind::Metric) {
        rec.emplace_back(on_grid ? grids[j][r.irange(0, 3)] : r.range(lo, hi));
      } else {
        const auto& lv = cols[j].levels;
        rec.emplace_back(lv[static_cast<std::size_t>(r.irange(0, static_cast<int>(lv.size()) - 1))]);
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline gmekit::EncodedData encode_records(const gmekit::RegressorSchema& schema,
                                          const std::vector<std::vector<gmekit::RawValue>>& recs) {
  gmekit::EncodedData d;
  d.x.reserve(recs.size());
  for (const auto& rec : recs) d.x.push_back(schema.encode(rec));
  return d;
}

inline gmekit::Theta random_theta(Rand& r, const gmekit::ParametricModel& model,
                                  double scale = 0.8) {
  gmekit::Theta th;
  for (int i = 0; i < model.beta_len(); ++i) th.beta.push_back(r.range(-scale, scale));
  if (model.family() == gmekit::Family::GaussianIdentity) th.v = {r.range(0.25, 1.0)};
  return th;
}

struct LabOptions {
  gmekit::Family family = gmekit::Family::GaussianIdentity;
  int max_metric = 3;
  int max_cat = 2;
  int max_interactions = 2;
  std::size_t n_rows = 40;
  bool on_grid = false;
  double beta_scale = 0.8;
};

// Random schema (>=2 regressor columns, random declared interactions, random
// interest designation) with the default term structure and random data.
inline LabModel random_lab(Rand& r, const LabOptions& opt = {}) {
  using namespace gmekit;
  SchemaSpec spec;
  int n_met = r.irange(1, opt.max_metric);
  int n_cat = r.irange(n_met >= 2 ? 0 : 1, opt.max_cat);
  for (int i = 0; i < n_met; ++i) spec.columns.push_back(metric_col("m" + std::to_string(i)));
  for (int i = 0; i < n_cat; ++i)
    spec.columns.push_back(cat_col("c" + std::to_string(i), r.irange(2, 3)));

  const int nc = static_cast<int>(spec.columns.size());
  int want = r.irange(0, opt.max_interactions);
  for (int k = 0; k < want && nc >= 2; ++k) {
    int a = r.irange(0, nc - 1);
    int b = r.irange(0, nc - 2);
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);
    InteractionSpec ia;
    ia.columns = {spec.columns[static_cast<std::size_t>(a)].name,
                  spec.columns[static_cast<std::size_t>(b)].name};
    bool dup = false;
    for (const auto& e : spec.interactions) dup = dup || e.columns == ia.columns;
    if (!dup) spec.interactions.push_back(std::move(ia));
  }

  if (!spec.interactions.empty() && r.coin(0.4)) {
    spec.interest.interaction =
        spec.interactions[static_cast<std::size_t>(r.irange(
                              0, static_cast<int>(spec.interactions.size()) - 1))]
            .columns;
  } else {
    spec.interest.column = spec.columns[static_cast<std::size_t>(r.irange(0, nc - 1))].name;
  }

  RegressorSchema schema = RegressorSchema::compile(spec);
  ParametricModel model = default_terms_model(schema, opt.family);
  Theta theta = random_theta(r, model, opt.beta_scale);
  EncodedData data = encode_records(schema, random_records(r, schema, opt.n_rows, opt.on_grid));
  return LabModel{std::move(schema), std::move(model), std::move(theta), std::move(data)};
}

// Dyadic atom weights: exactly representable, so permutation tests can demand
// bitwise equality.
inline std::vector<double> dyadic_weights(Rand& r, int k) {
  static const std::vector<std::vector<double>> table = {
      {1.0},
      {0.25, 0.75},
      {0.25, 0.25, 0.5},
      {0.125, 0.375, 0.25, 0.25},
  };
  std::vector<double> w = table[static_cast<std::size_t>(k - 1)];
  for (int i = k - 1; i > 0; --i)
    std::swap(w[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(r.irange(0, i))]);
  return w;
}

inline gmekit::Measure random_univariate(Rand& r, double lo, double hi) {
  using gmekit::Measure;
  switch (r.irange(0, 2)) {
    case 0:
      return Measure::dirac1(r.range(lo, hi));
    case 1: {
      int k = r.irange(2, 4);
      std::vector<double> pts;
      for (int i = 0; i < k; ++i) pts.push_back(r.range(lo, hi));
      return Measure::discrete_scalar(std::move(pts), dyadic_weights(r, k));
    }
    default: {
      double a = r.range(lo, hi), b = r.range(lo, hi);
      if (a > b) std::swap(a, b);
      if (b - a < 1e-3) b = a + 1e-3;
      return Measure::uniform(a, b);
    }
  }
}

// Measure on a dummy block of the given width: mass on the zero vector and on
// each basis vector.
inline gmekit::Measure block_measure(Rand& r, int width) {
  std::vector<std::vector<double>> pts;
  for (int a = 0; a <= width; ++a) {
    std::vector<double> p(static_cast<std::size_t>(width), 0.0);
    if (a > 0) p[static_cast<std::size_t>(a - 1)] = 1.0;
    pts.push_back(std::move(p));
  }
  return gmekit::Measure::discrete(std::move(pts), dyadic_weights(r, width + 1));
}

// Explicit independent covariate law: one part per non-interest column, in
// schema order, matching what Assumption::Independent expects.
inline gmekit::Measure random_covariate_product(Rand& r, const gmekit::RegressorSchema& schema,
                                                const std::vector<int>& mc_columns, double lo,
                                                double hi) {
  std::vector<gmekit::Measure> parts;
  for (int colid : mc_columns) {
    const auto& c = schema.columns()[static_cast<std::size_t>(colid)];
    if (c.kind == gmekit::ColumnKind::Metric)
      parts.push_back(random_univariate(r, lo, hi));
    else
      parts.push_back(block_measure(r, c.width));
  }
  return gmekit::Measure::product(std::move(parts));
}

// Fourth-order central difference.
template <class F>
double fd4(F&& f, double x, double h) {
  return (f(x - 2 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2 * h)) / (12.0 * h);
}

inline double rel_err(double a, double b) {
  double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

}  // namespace testkit
