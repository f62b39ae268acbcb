#include "gmekit/compat.hpp"

#include <algorithm>
#include <cmath>

#include "gmekit/errors.hpp"
#include "gmekit/util.hpp"

namespace gmekit {
namespace compat {

namespace {

// The measure route is the product; the literal formula is the audit.
double check_agree(double via_measures, double literal, const char* what) {
  const double tol =
      kCompatTol * std::max({1.0, std::abs(via_measures), std::abs(literal)});
  if (!(std::abs(via_measures - literal) <= tol))
    throw NumericError(std::string(what) +
                       ": measure route and literal formula disagree beyond 1e-8 (" +
                       std::to_string(via_measures) + " vs " + std::to_string(literal) + ")");
  return via_measures;
}

const InterestLayout& combined_layout(const QuantityEngine& engine) {
  const InterestLayout& lay = engine.layout(InteractionPolicy::Combined);
  if (lay.kind != InterestKind::Metric && lay.kind != InterestKind::Categorical)
    throw ConfigError("classic summaries are defined for a single interest column");
  return lay;
}

void require_data(const QuantityEngine& engine, const char* what) {
  if (engine.data().n() == 0) throw ConfigError(std::string(what) + " needs observed data");
}

double mean_at(const QuantityEngine& e, const Theta& theta, std::span<const double> x,
               double offset) {
  return e.model().mean(theta, x, offset);
}

// Row with the categorical interest block forced to an entry vector.
std::vector<double> with_block(const std::vector<double>& row, const InterestLayout& lay,
                               std::span<const double> entries) {
  std::vector<double> x = row;
  for (std::size_t q = 0; q < lay.main_entry_cols.size(); ++q)
    x[static_cast<std::size_t>(lay.main_entry_cols[q])] = entries[q];
  return x;
}

Measure dirac_covariates(const InterestLayout& lay, std::span<const double> x_full) {
  std::vector<double> mc;
  mc.reserve(lay.mc_cols.size());
  for (int c : lay.mc_cols) mc.push_back(x_full[static_cast<std::size_t>(c)]);
  return Measure::dirac(std::move(mc));
}

std::vector<double> column_means(const QuantityEngine& engine) {
  const auto& rows = engine.data().x;
  std::vector<double> m(static_cast<std::size_t>(engine.schema().p()), 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += r[j];
  for (double& v : m) v /= static_cast<double>(rows.size());
  return m;
}

void check_strict_means(const QuantityEngine& engine, const InterestLayout& lay,
                        bool include_interest) {
  const auto& cols = engine.schema().columns();
  for (int id : lay.mc_columns)
    if (cols[static_cast<std::size_t>(id)].kind == ColumnKind::Categorical)
      throw ConfigError("covariate '" + cols[static_cast<std::size_t>(id)].name +
                        "' is categorical and has no mean under the strict policy");
  if (include_interest && lay.kind == InterestKind::Categorical)
    throw ConfigError("the interest column is categorical and has no mean under the strict "
                      "policy");
}

std::vector<double> at_point(const QuantityEngine& engine, const Theta& theta,
                             const InterestLayout& lay, const std::vector<double>& x_full,
                             bool slope, double offset, const char* what) {
  QuantitySpec spec;
  spec.assumption = Assumption::Independent;
  spec.covariate_measure = dirac_covariates(lay, x_full);
  spec.offset = offset;

  if (lay.kind == InterestKind::Metric) {
    const double u = x_full[static_cast<std::size_t>(lay.metric_col)];
    const double via = slope
                           ? engine.slope_of_expectation(theta, std::span<const double>(&u, 1), spec)
                           : engine.averaged_expectation(theta, std::span<const double>(&u, 1), spec);
    const double lit = slope ? local_slope(engine.model(), engine.schema(), theta, x_full,
                                           lay.interest_label, offset)[0]
                             : mean_at(engine, theta, x_full, offset);
    return {check_agree(via, lit, what)};
  }

  std::vector<double> entries;
  for (int c : lay.main_entry_cols) entries.push_back(x_full[static_cast<std::size_t>(c)]);
  if (!slope) {
    const double via = engine.averaged_expectation(theta, entries, spec);
    const double lit = mean_at(engine, theta, x_full, offset);
    return {check_agree(via, lit, what)};
  }
  const std::vector<double> lit =
      local_slope(engine.model(), engine.schema(), theta, x_full, lay.interest_label, offset);
  const InteractionVectors vecs = build_interaction_vectors(lay);
  std::vector<double> out;
  for (std::size_t l = 0; l < vecs.v.size(); ++l) {
    const double via = engine.slope_of_expectation(theta, vecs.v[l], spec);
    out.push_back(check_agree(via, lit[l], what));
  }
  return out;
}

}  // namespace

std::vector<double> classic(const QuantityEngine& engine, const Theta& theta, ClassicKind kind,
                            const ClassicOptions& opt) {
  const InterestLayout& lay = combined_layout(engine);
  const auto& rows = engine.data().x;

  switch (kind) {
    case ClassicKind::AAP: {
      require_data(engine, "AAP");
      QuantitySpec spec;
      spec.assumption = Assumption::ConditionalJoint;
      spec.offset = opt.offset;
      const double via = engine.individualized_expectation(theta, spec);
      std::vector<double> g(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        g[i] = mean_at(engine, theta, rows[i], opt.offset);
      return {check_agree(via, pairwise_mean(g), "AAP")};
    }

    case ClassicKind::AME: {
      require_data(engine, "AME");
      QuantitySpec spec;
      spec.offset = opt.offset;
      if (lay.kind == InterestKind::Metric) {
        // Covariates keep their conditional law given the observed interest
        // value, so averaging the conditional slope recovers the row average.
        spec.assumption = Assumption::ConditionalJoint;
        const double via = engine.gme_metric(theta, spec);
        std::vector<double> s(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          s[i] = local_slope(engine.model(), engine.schema(), theta, rows[i],
                             lay.interest_label, opt.offset)[0];
        return {check_agree(via, pairwise_mean(s), "AME")};
      }
      // Categorical contrasts move every row to both levels, which is the
      // marginal covariate law, not the conditional one.
      spec.assumption = Assumption::MarginalJoint;
      const std::vector<double> via = engine.gme_categorical(theta, spec);
      std::vector<double> out;
      for (std::size_t l = 0; l < via.size(); ++l) {
        std::vector<double> s(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          s[i] = local_slope(engine.model(), engine.schema(), theta, rows[i],
                             lay.interest_label, opt.offset)[l];
        out.push_back(check_agree(via[l], pairwise_mean(s), "AME"));
      }
      return out;
    }

    case ClassicKind::APR:
    case ClassicKind::MER: {
      if (static_cast<int>(opt.x_rep.size()) != engine.schema().p())
        throw ConfigError("x_rep must be a full encoded regressor vector");
      return at_point(engine, theta, lay, opt.x_rep, kind == ClassicKind::MER, opt.offset,
                      kind == ClassicKind::MER ? "MER" : "APR");
    }

    case ClassicKind::APM:
    case ClassicKind::MEM: {
      require_data(engine, "APM/MEM");
      if (opt.mean_policy == CategoricalMeanPolicy::Strict)
        check_strict_means(engine, lay, kind == ClassicKind::APM);
      const std::vector<double> xbar = column_means(engine);
      return at_point(engine, theta, lay, xbar, kind == ClassicKind::MEM, opt.offset,
                      kind == ClassicKind::MEM ? "MEM" : "APM");
    }
  }
  throw ConfigError("bad classic kind");
}

double predictive_comparison(const QuantityEngine& engine, const Theta& theta, double u_lo,
                             double u_hi) {
  const InterestLayout& lay = combined_layout(engine);
  if (lay.kind != InterestKind::Metric)
    throw ConfigError("predictive comparisons need a metric interest");
  if (!(u_hi > u_lo)) throw ConfigError("predictive comparison needs u_lo < u_hi");
  require_data(engine, "predictive comparison");

  QuantitySpec spec;
  spec.assumption = Assumption::MarginalJoint;
  spec.interest_measure = Measure::uniform(u_lo, u_hi);
  const double via = engine.gme_metric(theta, spec);

  const auto& rows = engine.data().x;
  std::vector<double> d(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> x = rows[i];
    x[static_cast<std::size_t>(lay.metric_col)] = u_hi;
    const double hi = mean_at(engine, theta, x, 0.0);
    x[static_cast<std::size_t>(lay.metric_col)] = u_lo;
    d[i] = (hi - mean_at(engine, theta, x, 0.0)) / (u_hi - u_lo);
  }
  return check_agree(via, pairwise_mean(d), "predictive comparison");
}

KaufmanResult kaufman(const QuantityEngine& engine, const Theta& theta,
                      std::span<const double> x_ref) {
  if (engine.model().family() != Family::BinomialLogit)
    throw ConfigError("these pointwise summaries are defined for logit models");
  const InterestLayout& lay = combined_layout(engine);
  if (lay.kind != InterestKind::Metric)
    throw ConfigError("these pointwise summaries need a metric interest");
  if (static_cast<int>(x_ref.size()) != engine.schema().p())
    throw ConfigError("x_ref must be a full encoded regressor vector");

  const std::array<int, 1> self{lay.metric_col};
  if (!engine.model().terms_containing(std::span<const int>(self.data(), 1)).empty())
    throw ConfigError("the pointwise formulas assume the interest enters additively, without "
                      "interactions or powers");
  const int main_term = engine.model().find_term(std::span<const int>(self.data(), 1));
  if (main_term < 0) throw ConfigError("the model has no main-effect term for the interest");
  const double b =
      theta.beta[static_cast<std::size_t>(engine.model().terms()[static_cast<std::size_t>(main_term)].coef)];

  const double u = x_ref[static_cast<std::size_t>(lay.metric_col)];
  std::vector<double> x_full(x_ref.begin(), x_ref.end());

  QuantitySpec spec;
  spec.assumption = Assumption::Independent;
  spec.covariate_measure = dirac_covariates(lay, x_ref);

  KaufmanResult out;
  {
    const double p = mean_at(engine, theta, x_full, 0.0);
    const double lit = b * p * (1.0 - p);
    const double via = engine.slope_of_expectation(theta, std::span<const double>(&u, 1), spec);
    out.partial = check_agree(via, lit, "logit partial effect");
  }
  {
    QuantitySpec win = spec;
    win.interest_measure = Measure::uniform(u - 0.5, u + 0.5);
    const double via = engine.gme_metric(theta, win);
    std::vector<double> x = x_full;
    x[static_cast<std::size_t>(lay.metric_col)] = u + 0.5;
    const double hi = mean_at(engine, theta, x, 0.0);
    x[static_cast<std::size_t>(lay.metric_col)] = u - 0.5;
    const double lit = hi - mean_at(engine, theta, x, 0.0);
    out.delta_p = check_agree(via, lit, "unit probability change");
  }
  return out;
}

std::vector<AlePoint> ale_curve(const QuantityEngine& engine, const Theta& theta,
                                std::span<const double> z_grid) {
  const InterestLayout& lay = combined_layout(engine);
  if (lay.kind != InterestKind::Metric)
    throw ConfigError("accumulated local effects need a metric interest");
  require_data(engine, "accumulated local effects");
  const auto& rows = engine.data().x;

  double z0 = rows[0][static_cast<std::size_t>(lay.metric_col)];
  for (const auto& r : rows)
    z0 = std::min(z0, r[static_cast<std::size_t>(lay.metric_col)]);

  // Conditional average derivative at u. With no covariates there is nothing
  // to condition on, so the model slope at u stands alone; otherwise the
  // conditional law only exists at exactly observed interest values.
  auto cond_slope = [&](double u) {
    if (lay.mc_cols.empty()) {
      std::vector<double> x(static_cast<std::size_t>(engine.schema().p()), 0.0);
      x[static_cast<std::size_t>(lay.metric_col)] = u;
      return local_slope(engine.model(), engine.schema(), theta, x, lay.interest_label, 0.0)[0];
    }
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (r[static_cast<std::size_t>(lay.metric_col)] != u) continue;
      acc += local_slope(engine.model(), engine.schema(), theta, r, lay.interest_label, 0.0)[0];
      ++n;
    }
    if (n == 0)
      throw DataError("accumulated effects condition on exact interest values; no rows at " +
                      std::to_string(u));
    return acc / static_cast<double>(n);
  };

  const Quadrature& q = gauss_legendre(64);
  std::vector<AlePoint> out;
  out.reserve(z_grid.size());
  for (double z : z_grid) {
    if (z < z0) throw ConfigError("grid point below the observed interest minimum");
    if (z == z0) {
      out.push_back({z, 0.0});
      continue;
    }
    QuantitySpec spec;
    spec.assumption = Assumption::ConditionalJoint;
    spec.interest_measure = Measure::uniform(z0, z);
    const double via = (z - z0) * engine.gme_metric(theta, spec);

    const double mid = 0.5 * (z0 + z);
    const double half = 0.5 * (z - z0);
    double lit = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k)
      lit += q.weights[k] * cond_slope(mid + half * q.nodes[k]);
    lit *= half;
    out.push_back({z, check_agree(via, lit, "accumulated local effects")});
  }
  return out;
}

double fame(const QuantityEngine& engine, const Theta& theta, std::optional<double> h) {
  const InterestLayout& lay = combined_layout(engine);
  require_data(engine, "forward-difference effects");
  const auto& rows = engine.data().x;

  if (lay.kind == InterestKind::Metric) {
    if (!h || !(*h > 0.0))
      throw ConfigError("metric forward differences need a positive step width");

    // Per unique interest value: the uniform-window effect on (u, u+h) with
    // covariates at their joint law over the rows observed at u, share
    // weighted and scaled back by h. Telescopes to the raw forward-difference
    // average, which the literal route computes directly.
    std::vector<double> unique;
    for (const auto& r : rows) {
      const double u = r[static_cast<std::size_t>(lay.metric_col)];
      if (std::find(unique.begin(), unique.end(), u) == unique.end()) unique.push_back(u);
    }
    double via = 0.0;
    for (double u : unique) {
      EncodedData sub;
      for (const auto& r : rows)
        if (r[static_cast<std::size_t>(lay.metric_col)] == u) sub.x.push_back(r);
      const double share =
          static_cast<double>(sub.x.size()) / static_cast<double>(rows.size());
      QuantityEngine sub_engine(engine.model(), engine.schema(), std::move(sub));
      QuantitySpec spec;
      spec.assumption = Assumption::MarginalJoint;
      spec.interest_measure = Measure::uniform(u, u + *h);
      via += *h * share * sub_engine.gme_metric(theta, spec);
    }

    std::vector<double> d(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<double> x = rows[i];
      x[static_cast<std::size_t>(lay.metric_col)] += *h;
      d[i] = mean_at(engine, theta, x, 0.0) - mean_at(engine, theta, rows[i], 0.0);
    }
    return check_agree(via, pairwise_mean(d), "forward-difference effect");
  }

  if (h) throw ConfigError("categorical forward differences take no step width");
  // Rows away from the reference step back to it; each level's contrast is
  // evaluated under that level's own conditional covariate law.
  const InteractionVectors vecs = build_interaction_vectors(lay);
  const std::size_t n_levels = lay.main_entry_cols.size();

  std::vector<EncodedData> subset(n_levels);
  std::size_t n_nonref = 0;
  for (const auto& r : rows) {
    int level = -1;
    for (std::size_t q = 0; q < n_levels; ++q)
      if (r[static_cast<std::size_t>(lay.main_entry_cols[q])] == 1.0) level = static_cast<int>(q);
    if (level < 0) continue;
    subset[static_cast<std::size_t>(level)].x.push_back(r);
    ++n_nonref;
  }
  if (n_nonref == 0)
    throw DataError("every observation sits at the reference level; no step to take");

  double via = 0.0;
  for (std::size_t l = 0; l < n_levels; ++l) {
    if (subset[l].x.empty()) continue;
    const double share =
        static_cast<double>(subset[l].x.size()) / static_cast<double>(n_nonref);
    QuantityEngine level_engine(engine.model(), engine.schema(), std::move(subset[l]));
    QuantitySpec spec;
    spec.assumption = Assumption::MarginalJoint;
    via += share * level_engine.slope_of_expectation(theta, vecs.v[l], spec);
  }

  std::vector<double> d;
  d.reserve(n_nonref);
  const std::vector<double> zero(n_levels, 0.0);
  for (const auto& r : rows) {
    bool nonref = false;
    for (std::size_t q = 0; q < n_levels; ++q)
      if (r[static_cast<std::size_t>(lay.main_entry_cols[q])] == 1.0) nonref = true;
    if (!nonref) continue;
    d.push_back(mean_at(engine, theta, r, 0.0) -
                mean_at(engine, theta, with_block(r, lay, zero), 0.0));
  }
  return check_agree(via, pairwise_mean(d), "forward-difference effect");
}

}  // namespace compat
}  // namespace gmekit
