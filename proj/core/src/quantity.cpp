#include "gmekit/quantity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gmekit/errors.hpp"
#include "gmekit/util.hpp"

namespace gmekit {

Assumption assumption_from_string(const std::string& s) {
  if (s == "A.I") return Assumption::Independent;
  if (s == "A.II'") return Assumption::MarginalJoint;
  if (s == "A.II''") return Assumption::ConditionalJoint;
  throw ConfigError("unknown assumption '" + s + "' (expected A.I, A.II' or A.II'')");
}

std::string assumption_to_string(Assumption a) {
  switch (a) {
    case Assumption::Independent: return "A.I";
    case Assumption::MarginalJoint: return "A.II'";
    case Assumption::ConditionalJoint: return "A.II''";
  }
  throw ConfigError("bad assumption enum");
}

int InterestLayout::d_I() const {
  switch (kind) {
    case InterestKind::Metric:
    case InterestKind::MetricInteraction:
      return 1;
    case InterestKind::Categorical:
    case InterestKind::CategoricalInteraction:
      return n_entries();
    case InterestKind::Mixed:
      return 1 + n_entries();
  }
  throw ConfigError("bad interest kind");
}

namespace {

std::string level_label(const CompiledColumn& c, int j) {
  return c.name + "=" + c.coded_levels[static_cast<std::size_t>(j)];
}

bool is_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

InterestLayout resolve_interest(const RegressorSchema& schema, const ParametricModel& model,
                                InteractionPolicy policy) {
  const InterestSpec& in = schema.spec().interest;
  if (in.column.empty() && !in.is_interaction())
    throw ConfigError("schema declares no interest regressor");

  InterestLayout lay;
  const auto& cols = schema.columns();

  auto block_indices = [&](const CompiledColumn& c) {
    std::vector<int> out;
    for (int j = 0; j < c.width; ++j) out.push_back(c.offset + j);
    return out;
  };

  // Declared interactions that involve a given column name.
  auto involved = [&](const std::string& name) {
    std::vector<const InteractionSpec*> out;
    for (const auto& ia : schema.spec().interactions)
      if (ia.columns[0] == name || ia.columns[1] == name) out.push_back(&ia);
    return out;
  };

  // Stacked categorical structure over `cat_cols` (schema order) with product
  // entries for each declared interaction in `pairs`.
  auto build_stacked = [&](const std::vector<int>& cat_col_ids,
                           const std::vector<const InteractionSpec*>& pairs) {
    for (int id : cat_col_ids) {
      const CompiledColumn& c = cols[static_cast<std::size_t>(id)];
      for (int e : block_indices(c)) lay.interest_cols.push_back(e);
      for (int j = 0; j < c.width; ++j) {
        lay.main_entry_cols.push_back(c.offset + j);
        lay.entry_labels.push_back(level_label(c, j));
      }
    }
    auto entry_position = [&](int encoded) {
      for (std::size_t q = 0; q < lay.main_entry_cols.size(); ++q)
        if (lay.main_entry_cols[q] == encoded) return static_cast<int>(q);
      throw ConfigError("interaction factor outside the interest block");
    };
    for (const InteractionSpec* ia : pairs) {
      const CompiledColumn& a = schema.column(ia->columns[0]);
      const CompiledColumn& b = schema.column(ia->columns[1]);
      for (int ja = 0; ja < a.width; ++ja) {
        for (int jb = 0; jb < b.width; ++jb) {
          const int fa = a.offset + ja;
          const int fb = b.offset + jb;
          const std::array<int, 2> fac{fa, fb};
          const int term = model.find_term(std::span<const int>(fac.data(), 2));
          if (term < 0)
            throw ConfigError("model lacks the interaction term " + level_label(a, ja) + "*" +
                              level_label(b, jb));
          ProductEntry pe;
          pe.term = term;
          pe.include_positions = {entry_position(fa), entry_position(fb)};
          lay.product_entries.push_back(pe);
          lay.entry_labels.push_back(level_label(a, ja) + "*" + level_label(b, jb));
        }
      }
    }
  };

  auto build_mixed = [&](const CompiledColumn& cat, const CompiledColumn& met) {
    lay.kind = InterestKind::Mixed;
    lay.metric_col = met.offset;
    lay.interest_cols.push_back(met.offset);
    for (int e : block_indices(cat)) lay.interest_cols.push_back(e);
    for (int j = 0; j < cat.width; ++j) {
      lay.main_entry_cols.push_back(cat.offset + j);
      lay.entry_labels.push_back(level_label(cat, j));
    }
    for (int j = 0; j < cat.width; ++j) {
      const std::array<int, 2> fac{cat.offset + j, met.offset};
      const int term = model.find_term(std::span<const int>(fac.data(), 2));
      if (term < 0)
        throw ConfigError("model lacks the interaction term " + level_label(cat, j) + "*" +
                          met.name);
      ProductEntry pe;
      pe.term = term;
      pe.include_positions = {j};
      lay.product_entries.push_back(pe);
      lay.entry_labels.push_back(level_label(cat, j) + "*" + met.name);
    }
    lay.interest_label = cat.name + "*" + met.name;
  };

  auto column_of_encoded = [&](int encoded) -> const CompiledColumn& {
    for (const auto& c : cols)
      if (encoded >= c.offset && encoded < c.offset + c.width) return c;
    throw ConfigError("encoded index out of range");
  };

  if (!in.column.empty()) {
    const CompiledColumn& c = schema.column(in.column);
    const auto pairs = involved(c.name);
    lay.interest_label = c.name;
    if (c.kind == ColumnKind::Metric) {
      lay.kind = InterestKind::Metric;
      lay.metric_col = c.offset;
      lay.interest_cols = {c.offset};
      if (policy == InteractionPolicy::Separated) {
        // Hive off every term that combines the interest with other
        // regressors; pure powers of the interest stay in place.
        const std::array<int, 1> self{c.offset};
        for (int t : model.terms_containing(std::span<const int>(self.data(), 1))) {
          const auto& f = model.terms()[static_cast<std::size_t>(t)].factors;
          const bool has_other =
              std::any_of(f.begin(), f.end(), [&](int j) { return j != c.offset; });
          if (!has_other) continue;
          for (int j : f) {
            if (j == c.offset) continue;
            if (column_of_encoded(j).kind != ColumnKind::Metric)
              throw ConfigError(
                  "separated metric effects need metric interaction partners; designate the "
                  "categorical side of '" + c.name + "' interactions as the interest instead");
          }
          lay.z_terms.push_back(t);
        }
      }
    } else {
      // Split declared partners by kind.
      std::vector<const InteractionSpec*> cat_pairs;
      const CompiledColumn* met_partner = nullptr;
      for (const InteractionSpec* ia : pairs) {
        const std::string& other = ia->columns[0] == c.name ? ia->columns[1] : ia->columns[0];
        const CompiledColumn& oc = schema.column(other);
        if (oc.kind == ColumnKind::Categorical)
          cat_pairs.push_back(ia);
        else
          met_partner = &oc;
      }
      if (pairs.empty() || policy == InteractionPolicy::Combined) {
        lay.kind = InterestKind::Categorical;
        lay.interest_cols = block_indices(c);
        for (int j = 0; j < c.width; ++j) {
          lay.main_entry_cols.push_back(c.offset + j);
          lay.entry_labels.push_back(level_label(c, j));
        }
      } else if (!cat_pairs.empty() && met_partner == nullptr) {
        lay.kind = InterestKind::CategoricalInteraction;
        std::vector<int> ids{schema.column_index(c.name)};
        for (const InteractionSpec* ia : cat_pairs)
          for (const auto& n : ia->columns) {
            const int id = schema.column_index(n);
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
          }
        std::sort(ids.begin(), ids.end());  // schema declaration order
        build_stacked(ids, cat_pairs);
      } else if (cat_pairs.empty() && met_partner != nullptr) {
        build_mixed(c, *met_partner);
      } else {
        throw ConfigError("column '" + c.name +
                          "' interacts with both categorical and metric partners; separated "
                          "quantification of that structure is not supported");
      }
    }
  } else {
    const CompiledColumn& a = schema.column(in.interaction[0]);
    const CompiledColumn& b = schema.column(in.interaction[1]);
    lay.interest_label = a.name + "*" + b.name;
    if (a.kind == ColumnKind::Metric && b.kind == ColumnKind::Metric) {
      lay.kind = InterestKind::MetricInteraction;
      lay.met_factors = {a.offset, b.offset};
      const std::array<int, 2> fac{a.offset, b.offset};
      lay.interest_term = model.find_term(std::span<const int>(fac.data(), 2));
      if (lay.interest_term < 0)
        throw ConfigError("model lacks the interaction term " + a.name + "*" + b.name);
      lay.z_terms = model.terms_containing(std::span<const int>(fac.data(), 2));
    } else if (a.kind == ColumnKind::Categorical && b.kind == ColumnKind::Categorical) {
      // A designated interaction always uses the stacked structure.
      lay.kind = InterestKind::CategoricalInteraction;
      std::vector<int> ids{schema.column_index(a.name), schema.column_index(b.name)};
      std::sort(ids.begin(), ids.end());
      for (const auto& ia : schema.spec().interactions) {
        if ((ia.columns[0] == a.name && ia.columns[1] == b.name) ||
            (ia.columns[0] == b.name && ia.columns[1] == a.name)) {
          build_stacked(ids, {&ia});
          break;
        }
      }
    } else {
      const CompiledColumn& cat = a.kind == ColumnKind::Categorical ? a : b;
      const CompiledColumn& met = a.kind == ColumnKind::Metric ? a : b;
      build_mixed(cat, met);
    }
  }

  // Separated treatment for categorical and mixed interests mirrors the metric
  // path: any term coupling an interest column with an outside regressor is
  // hived off as an independent product regressor. Structural main and product
  // terms have interest-only factors, so they never match. A designated
  // interaction interest is a request for separated components regardless of
  // the policy flag.
  if ((policy == InteractionPolicy::Separated || in.is_interaction()) &&
      (lay.kind == InterestKind::Categorical ||
       lay.kind == InterestKind::CategoricalInteraction || lay.kind == InterestKind::Mixed)) {
    auto is_interest = [&](int j) {
      return std::find(lay.interest_cols.begin(), lay.interest_cols.end(), j) !=
             lay.interest_cols.end();
    };
    for (std::size_t t = 0; t < model.terms().size(); ++t) {
      const auto& f = model.terms()[t].factors;
      if (std::any_of(f.begin(), f.end(), is_interest) &&
          !std::all_of(f.begin(), f.end(), is_interest))
        lay.z_terms.push_back(static_cast<int>(t));
    }
  }

  for (int j = 0; j < schema.p(); ++j)
    if (std::find(lay.interest_cols.begin(), lay.interest_cols.end(), j) ==
        lay.interest_cols.end())
      lay.mc_cols.push_back(j);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const CompiledColumn& c = cols[i];
    if (std::find(lay.interest_cols.begin(), lay.interest_cols.end(), c.offset) ==
        lay.interest_cols.end())
      lay.mc_columns.push_back(static_cast<int>(i));
  }
  return lay;
}

InteractionVectors build_interaction_vectors(const InterestLayout& lay) {
  InteractionVectors out;
  const int e = lay.n_entries();
  const std::size_t mains = lay.main_entry_cols.size();
  for (int l = 0; l < e; ++l) {
    std::vector<double> v(static_cast<std::size_t>(e), 0.0);
    v[static_cast<std::size_t>(l)] = 1.0;
    if (l >= static_cast<int>(mains)) {
      const ProductEntry& pe = lay.product_entries[static_cast<std::size_t>(l) - mains];
      for (int q : pe.include_positions) v[static_cast<std::size_t>(q)] = 1.0;
    }
    std::vector<double> ref = v;
    ref[static_cast<std::size_t>(l)] = 0.0;
    out.v.push_back(std::move(v));
    out.ref.push_back(std::move(ref));
  }
  return out;
}

// ---------------------------------------------------------------------------
// QuantityEngine

struct QuantityEngine::Inner {
  std::size_t mc_dim = 0;
  bool conditional = false;                // A.II'': mu-bar built per interest value
  std::optional<Measure> combined;         // fixed case: mu-bar and z parts in one product
  std::vector<Measure> z_measures;
  std::vector<int> z_terms;
  std::optional<SupportSet> cond_normalize;
};

QuantityEngine::QuantityEngine(ParametricModel model, RegressorSchema schema, EncodedData data)
    : model_(std::move(model)), schema_(std::move(schema)), data_(std::move(data)) {
  if (model_.p() != schema_.p())
    throw ConfigError("model covers " + std::to_string(model_.p()) +
                      " regressors, schema encodes " + std::to_string(schema_.p()));
  for (const auto& r : data_.x)
    if (static_cast<int>(r.size()) != schema_.p())
      throw DataError("encoded data row does not match the schema dimension");
#ifdef NDEBUG
  cross_check_ = false;
#else
  cross_check_ = true;
#endif
}

const InterestLayout& QuantityEngine::layout(InteractionPolicy policy) const {
  auto& slot =
      policy == InteractionPolicy::Combined ? layout_combined_ : layout_separated_;
  if (!slot) slot = resolve_interest(schema_, model_, policy);
  return *slot;
}

Measure QuantityEngine::conditional_measure(std::span<const int> on_cols,
                                            std::span<const double> value,
                                            const std::optional<SupportSet>& normalize_to) const {
  auto build = [&]() {
    Measure m = Measure::empirical_conditional(data_.x, on_cols, value);
    if (normalize_to) m = m.normalized(*normalize_to);
    return m;
  };
  if (normalize_to) return build();  // not cached: the set is caller state
  std::vector<double> key;
  key.reserve(on_cols.size() * 2 + 1);
  key.push_back(static_cast<double>(on_cols.size()));
  for (int c : on_cols) key.push_back(static_cast<double>(c));
  for (double v : value) key.push_back(v);
  auto it = conditional_cache_.find(key);
  if (it == conditional_cache_.end()) it = conditional_cache_.emplace(key, build()).first;
  return it->second;
}

Measure QuantityEngine::univariate_column_measure(int encoded_col, const QuantitySpec& spec,
                                                  const InterestLayout& lay) const {
  if (encoded_col == lay.metric_col &&
      (lay.kind == InterestKind::Metric || lay.kind == InterestKind::Mixed))
    return auto_interest_measure(spec);
  if (std::find(lay.interest_cols.begin(), lay.interest_cols.end(), encoded_col) !=
      lay.interest_cols.end()) {
    // Category entry absorbed by the interest block: its independent copy
    // follows the observed share of the entry.
    if (data_.n() == 0)
      throw ConfigError(
          "no data to derive the law of an interest category entry inside a hived-off term");
    const std::array<int, 1> keep{encoded_col};
    return Measure::empirical_marginal(data_.x, std::span<const int>(keep.data(), 1));
  }
  if (spec.assumption == Assumption::Independent && spec.covariate_measure) {
    // Parts align with the non-interest columns in schema order. A lone
    // covariate column carries its measure unwrapped (single-part products
    // collapse on construction).
    const Measure& cm = *spec.covariate_measure;
    const bool split = cm.kind() == Measure::Kind::Product;
    if (split || lay.mc_columns.size() == 1) {
      std::size_t part = 0;
      for (int colid : lay.mc_columns) {
        const CompiledColumn& c = schema_.columns()[static_cast<std::size_t>(colid)];
        if (encoded_col >= c.offset && encoded_col < c.offset + c.width) {
          const Measure& m = split ? cm.parts()[part] : cm;
          if (m.dim() != 1)
            throw ConfigError("interaction factor needs a univariate covariate measure");
          return m;
        }
        ++part;
      }
      throw ConfigError("interaction factor is not a covariate column");
    }
  }
  if (data_.n() == 0)
    throw ConfigError("no data to derive a marginal for an interaction factor; supply a product "
                      "covariate measure");
  const std::array<int, 1> keep{encoded_col};
  return Measure::empirical_marginal(data_.x, std::span<const int>(keep.data(), 1));
}

QuantityEngine::Inner QuantityEngine::inner_context(const QuantitySpec& spec,
                                                    const InterestLayout& lay) const {
  Inner in;
  in.mc_dim = lay.mc_cols.size();
  in.z_terms = lay.z_terms;
  in.cond_normalize = spec.covariate_set;

  std::optional<Measure> mu_bar;
  switch (spec.assumption) {
    case Assumption::Independent: {
      if (in.mc_dim == 0) break;
      if (spec.covariate_measure) {
        if (spec.covariate_measure->dim() != static_cast<int>(in.mc_dim))
          throw ConfigError("covariate measure has dimension " +
                            std::to_string(spec.covariate_measure->dim()) + ", expected " +
                            std::to_string(in.mc_dim));
        mu_bar = *spec.covariate_measure;
      } else {
        if (data_.n() == 0)
          throw ConfigError("no covariate measure given and no data to derive one");
        std::vector<Measure> parts;
        for (int colid : lay.mc_columns) {
          const CompiledColumn& c = schema_.columns()[static_cast<std::size_t>(colid)];
          std::vector<int> keep;
          for (int j = 0; j < c.width; ++j) keep.push_back(c.offset + j);
          parts.push_back(Measure::empirical_marginal(data_.x, keep));
        }
        mu_bar = Measure::product(std::move(parts));
      }
      break;
    }
    case Assumption::MarginalJoint: {
      if (in.mc_dim == 0) break;
      if (spec.covariate_measure) {
        if (spec.covariate_measure->dim() != static_cast<int>(in.mc_dim))
          throw ConfigError("covariate measure dimension mismatch");
        mu_bar = *spec.covariate_measure;
      } else {
        if (data_.n() == 0)
          throw ConfigError("no covariate measure given and no data to derive one");
        mu_bar = Measure::empirical_marginal(data_.x, lay.mc_cols);
      }
      break;
    }
    case Assumption::ConditionalJoint: {
      if (lay.kind == InterestKind::MetricInteraction)
        throw ConfigError(
            "A.II'' is undefined for a product regressor of interest: no conditional law is "
            "identified for it");
      if (spec.covariate_measure)
        throw ConfigError("A.II'' derives the covariate law from data; drop covariate_measure");
      if (in.mc_dim > 0) {
        if (data_.n() == 0) throw ConfigError("A.II'' needs data");
        in.conditional = true;
      }
      break;
    }
  }
  if (mu_bar && spec.covariate_set) mu_bar = mu_bar->normalized(*spec.covariate_set);

  // Independent product-value coordinates for hived-off interaction terms.
  // A product interest contributes its own measure for the factor pair; the
  // remaining factors push forward through multiplication.
  for (int t : in.z_terms) {
    std::vector<int> rest = model_.terms()[static_cast<std::size_t>(t)].factors;
    std::optional<Measure> m;
    if (lay.kind == InterestKind::MetricInteraction) {
      m = auto_interest_measure(spec);
      for (int f : lay.met_factors) {
        auto it = std::find(rest.begin(), rest.end(), f);
        if (it != rest.end()) rest.erase(it);
      }
    }
    for (int f : rest) {
      Measure fm = univariate_column_measure(f, spec, lay);
      m = m ? interaction_measure(*m, fm, 0) : std::move(fm);
    }
    in.z_measures.push_back(std::move(*m));
  }

  if (!in.conditional) {
    std::vector<Measure> parts;
    if (mu_bar) parts.push_back(std::move(*mu_bar));
    for (const Measure& z : in.z_measures) parts.push_back(z);
    if (!parts.empty()) in.combined = Measure::product(std::move(parts));
  }
  return in;
}

double QuantityEngine::inner_integral(
    const Inner& in, std::span<const int> cond_cols, std::span<const double> cond_value,
    const std::function<double(std::span<const double>, std::span<const TermOverride>)>& f) const {
  if (in.mc_dim == 0 && in.z_measures.empty()) return f({}, {});

  std::optional<Measure> local;
  const Measure* base = nullptr;
  if (in.conditional) {
    Measure cm = conditional_measure(cond_cols, cond_value, in.cond_normalize);
    if (in.z_measures.empty()) {
      local = std::move(cm);
    } else {
      std::vector<Measure> parts;
      parts.push_back(std::move(cm));
      for (const Measure& z : in.z_measures) parts.push_back(z);
      local = Measure::product(std::move(parts));
    }
    base = &*local;
  } else {
    base = &*in.combined;
  }

  std::vector<TermOverride> zov(in.z_terms.size());
  return base->integrate([&](std::span<const double> w) {
    for (std::size_t k = 0; k < in.z_terms.size(); ++k)
      zov[k] = TermOverride{in.z_terms[k], w[in.mc_dim + k]};
    return f(w.subspan(0, in.mc_dim), zov);
  });
}

Measure QuantityEngine::auto_interest_measure(const QuantitySpec& spec) const {
  if (spec.interest_measure) return *spec.interest_measure;
  const InterestLayout& lay = layout(spec.policy);
  if (data_.n() == 0)
    throw ConfigError("no interest measure given and no data to derive one");
  switch (lay.kind) {
    case InterestKind::Metric:
    case InterestKind::Mixed: {
      const std::array<int, 1> keep{lay.metric_col};
      return Measure::empirical_marginal(data_.x, std::span<const int>(keep.data(), 1));
    }
    case InterestKind::MetricInteraction: {
      std::vector<std::vector<double>> pts;
      pts.reserve(data_.n());
      for (const auto& r : data_.x)
        pts.push_back({r[static_cast<std::size_t>(lay.met_factors[0])] *
                       r[static_cast<std::size_t>(lay.met_factors[1])]});
      return Measure::empirical_joint(pts);
    }
    case InterestKind::Categorical:
    case InterestKind::CategoricalInteraction: {
      std::vector<std::vector<double>> pts;
      pts.reserve(data_.n());
      for (const auto& r : data_.x) {
        std::vector<double> e;
        e.reserve(static_cast<std::size_t>(lay.n_entries()));
        for (int c : lay.main_entry_cols) e.push_back(r[static_cast<std::size_t>(c)]);
        for (const ProductEntry& pe : lay.product_entries) {
          double prod = 1.0;
          for (int fc : model_.terms()[static_cast<std::size_t>(pe.term)].factors)
            prod *= r[static_cast<std::size_t>(fc)];
          e.push_back(prod);
        }
        pts.push_back(std::move(e));
      }
      return Measure::empirical_joint(pts);
    }
  }
  throw ConfigError("bad interest kind");
}

namespace {

// Scratch for one interest configuration: preset coordinates and fixed term
// overrides, extended per inner point.
struct EvalFrame {
  std::vector<double> x;
  std::vector<TermOverride> fixed_ov;
  std::vector<TermOverride> all_ov;

  void fill_mc(const std::vector<int>& mc_cols, std::span<const double> mc) {
    for (std::size_t i = 0; i < mc_cols.size(); ++i)
      x[static_cast<std::size_t>(mc_cols[i])] = mc[i];
  }
  std::span<const TermOverride> merge(std::span<const TermOverride> zov) {
    all_ov.assign(fixed_ov.begin(), fixed_ov.end());
    all_ov.insert(all_ov.end(), zov.begin(), zov.end());
    return all_ov;
  }
};

}  // namespace

double QuantityEngine::expectation_impl(const Theta& theta, const InterestLayout& lay,
                                        const Inner& in, std::span<const double> x_I,
                                        const QuantitySpec& spec) const {
  EvalFrame fr;
  fr.x.assign(static_cast<std::size_t>(schema_.p()), 0.0);
  std::vector<double> cond_value;

  switch (lay.kind) {
    case InterestKind::Metric:
      if (x_I.size() != 1) throw ConfigError("metric interest takes one value");
      fr.x[static_cast<std::size_t>(lay.metric_col)] = x_I[0];
      cond_value = {x_I[0]};
      break;
    case InterestKind::MetricInteraction:
      if (x_I.size() != 1) throw ConfigError("interaction interest takes one value");
      fr.fixed_ov.push_back(TermOverride{lay.interest_term, x_I[0]});
      break;
    case InterestKind::Categorical:
    case InterestKind::CategoricalInteraction: {
      if (static_cast<int>(x_I.size()) != lay.n_entries())
        throw ConfigError("interest entry vector has the wrong length");
      const std::size_t mains = lay.main_entry_cols.size();
      for (std::size_t q = 0; q < mains; ++q)
        fr.x[static_cast<std::size_t>(lay.main_entry_cols[q])] = x_I[q];
      for (std::size_t k = 0; k < lay.product_entries.size(); ++k)
        fr.fixed_ov.push_back(TermOverride{lay.product_entries[k].term, x_I[mains + k]});
      if (in.conditional) {
        if (lay.kind == InterestKind::CategoricalInteraction)
          throw ConfigError(
              "A.II'' is undefined for separated categorical interaction components");
        cond_value.assign(x_I.begin(), x_I.end());
      }
      break;
    }
    case InterestKind::Mixed: {
      if (static_cast<int>(x_I.size()) != 1 + lay.n_entries())
        throw ConfigError("mixed interest takes (metric value, entries)");
      if (in.conditional)
        throw ConfigError("mixed interaction quantities are defined under A.I / A.II' only");
      const double xm = x_I[0];
      fr.x[static_cast<std::size_t>(lay.metric_col)] = xm;
      const std::size_t mains = lay.main_entry_cols.size();
      for (std::size_t q = 0; q < mains; ++q)
        fr.x[static_cast<std::size_t>(lay.main_entry_cols[q])] = x_I[1 + q];
      for (std::size_t k = 0; k < lay.product_entries.size(); ++k)
        fr.fixed_ov.push_back(TermOverride{lay.product_entries[k].term, x_I[1 + mains + k] * xm});
      break;
    }
  }

  return inner_integral(in, lay.interest_cols, cond_value,
                        [&](std::span<const double> mc, std::span<const TermOverride> zov) {
                          fr.fill_mc(lay.mc_cols, mc);
                          return model_.mean(theta, fr.x, spec.offset, fr.merge(zov));
                        });
}

double QuantityEngine::metric_slope_impl(const Theta& theta, const InterestLayout& lay,
                                         const Inner& in, double x_I,
                                         const QuantitySpec& spec) const {
  EvalFrame fr;
  fr.x.assign(static_cast<std::size_t>(schema_.p()), 0.0);
  std::vector<double> cond_value;

  if (lay.kind == InterestKind::Metric) {
    fr.x[static_cast<std::size_t>(lay.metric_col)] = x_I;
    cond_value = {x_I};
    return inner_integral(in, lay.interest_cols, cond_value,
                          [&](std::span<const double> mc, std::span<const TermOverride> zov) {
                            fr.fill_mc(lay.mc_cols, mc);
                            const auto ov = fr.merge(zov);
                            const double e = model_.eta(theta.beta, fr.x, spec.offset, ov);
                            return model_.dmean_deta(e) *
                                   model_.deta_dx(theta.beta, fr.x, lay.metric_col, ov);
                          });
  }
  if (lay.kind == InterestKind::MetricInteraction) {
    fr.fixed_ov.push_back(TermOverride{lay.interest_term, x_I});
    const double slope_coef = model_.deta_doverride(theta.beta, lay.interest_term);
    return inner_integral(in, lay.interest_cols, cond_value,
                          [&](std::span<const double> mc, std::span<const TermOverride> zov) {
                            fr.fill_mc(lay.mc_cols, mc);
                            const double e = model_.eta(theta.beta, fr.x, spec.offset, fr.merge(zov));
                            return model_.dmean_deta(e) * slope_coef;
                          });
  }
  throw ConfigError("metric slope needs a metric or product interest");
}

double QuantityEngine::sbar_impl(const Theta& theta, const InterestLayout& lay, const Inner& in,
                                 std::span<const double> entries, const QuantitySpec& spec) const {
  if (in.conditional) {
    // Conditional covariate laws at the category and at the reference differ;
    // the two expectations integrate separately.
    std::vector<double> zero(entries.size(), 0.0);
    return expectation_impl(theta, lay, in, entries, spec) -
           expectation_impl(theta, lay, in, zero, spec);
  }
  EvalFrame at, ref;
  at.x.assign(static_cast<std::size_t>(schema_.p()), 0.0);
  ref.x.assign(static_cast<std::size_t>(schema_.p()), 0.0);
  const std::size_t mains = lay.main_entry_cols.size();
  for (std::size_t q = 0; q < mains; ++q)
    at.x[static_cast<std::size_t>(lay.main_entry_cols[q])] = entries[q];
  for (std::size_t k = 0; k < lay.product_entries.size(); ++k) {
    at.fixed_ov.push_back(TermOverride{lay.product_entries[k].term, entries[mains + k]});
    ref.fixed_ov.push_back(TermOverride{lay.product_entries[k].term, 0.0});
  }
  return inner_integral(in, lay.interest_cols, {},
                        [&](std::span<const double> mc, std::span<const TermOverride> zov) {
                          at.fill_mc(lay.mc_cols, mc);
                          ref.fill_mc(lay.mc_cols, mc);
                          return model_.mean(theta, at.x, spec.offset, at.merge(zov)) -
                                 model_.mean(theta, ref.x, spec.offset, ref.merge(zov));
                        });
}

double QuantityEngine::averaged_expectation(const Theta& theta, std::span<const double> x_I,
                                            const QuantitySpec& spec) const {
  model_.check_theta(theta);
  const InterestLayout& lay = layout(spec.policy);
  const Inner in = inner_context(spec, lay);
  return expectation_impl(theta, lay, in, x_I, spec);
}

double QuantityEngine::individualized_expectation(const Theta& theta,
                                                  const QuantitySpec& spec) const {
  model_.check_theta(theta);
  const InterestLayout& lay = layout(spec.policy);
  if (lay.kind == InterestKind::Mixed)
    throw ConfigError(
        "individualized expectation over a mixed interest block is not supported; evaluate "
        "averaged_expectation at explicit values");
  const Inner in = inner_context(spec, lay);
  const Measure mu = auto_interest_measure(spec);
  const int want = lay.kind == InterestKind::Categorical ||
                           lay.kind == InterestKind::CategoricalInteraction
                       ? lay.n_entries()
                       : 1;
  if (mu.dim() != want)
    throw ConfigError("interest measure has dimension " + std::to_string(mu.dim()) +
                      ", expected " + std::to_string(want));
  return mu.integrate([&](std::span<const double> x_I) {
    return expectation_impl(theta, lay, in, x_I, spec);
  });
}

double QuantityEngine::slope_of_expectation(const Theta& theta, std::span<const double> x_I,
                                            const QuantitySpec& spec) const {
  model_.check_theta(theta);
  const InterestLayout& lay = layout(spec.policy);
  const Inner in = inner_context(spec, lay);
  switch (lay.kind) {
    case InterestKind::Metric:
    case InterestKind::MetricInteraction:
      if (x_I.size() != 1) throw ConfigError("metric interest takes one value");
      return metric_slope_impl(theta, lay, in, x_I[0], spec);
    case InterestKind::Categorical:
    case InterestKind::CategoricalInteraction:
      return sbar_impl(theta, lay, in, x_I, spec);
    case InterestKind::Mixed:
      throw ConfigError("mixed interest has vector-valued effects; use gme");
  }
  throw ConfigError("bad interest kind");
}

double QuantityEngine::gme_metric_quadrature(const Theta& theta, const QuantitySpec& spec) const {
  model_.check_theta(theta);
  const InterestLayout& lay = layout(spec.policy);
  if (lay.kind != InterestKind::Metric && lay.kind != InterestKind::MetricInteraction)
    throw ConfigError("gme_metric needs a metric or product interest");
  const Inner in = inner_context(spec, lay);
  const Measure mu = auto_interest_measure(spec);
  if (mu.dim() != 1) throw ConfigError("interest measure must be univariate");
  return mu.integrate1([&](double x) { return metric_slope_impl(theta, lay, in, x, spec); });
}

double QuantityEngine::gme_metric(const Theta& theta, const QuantitySpec& spec) const {
  model_.check_theta(theta);
  const InterestLayout& lay = layout(spec.policy);
  if (lay.kind != InterestKind::Metric && lay.kind != InterestKind::MetricInteraction)
    throw ConfigError("gme_metric needs a metric or product interest");
  const Measure mu = auto_interest_measure(spec);
  const bool endpoint_ok = spec.assumption != Assumption::ConditionalJoint &&
                           mu.kind() == Measure::Kind::Uniform;
  if (!endpoint_ok) return gme_metric_quadrature(theta, spec);

  // Endpoint form: average slope over U(a,b) telescopes to the scaled
  // difference of averaged expectations at the ends. Not valid under A.II''.
  const Inner in = inner_context(spec, lay);
  const double a = mu.uniform_lo();
  const double b = mu.uniform_hi();
  const double ea = expectation_impl(theta, lay, in, std::span<const double>(&a, 1), spec);
  const double eb = expectation_impl(theta, lay, in, std::span<const double>(&b, 1), spec);
  const double fast = (eb - ea) / (b - a);
  if (cross_check_) {
    const double quad = gme_metric_quadrature(theta, spec);
    const double tol = 1e-8 * std::max({1.0, std::abs(fast), std::abs(quad)});
    if (std::abs(fast - quad) > tol)
      throw NumericError("endpoint fast path disagrees with quadrature beyond 1e-8");
  }
  return fast;
}

std::vector<double> QuantityEngine::gme_categorical(const Theta& theta,
                                                    const QuantitySpec& spec) const {
  model_.check_theta(theta);
  const InterestLayout& lay = layout(spec.policy);
  if (lay.kind != InterestKind::Categorical && lay.kind != InterestKind::CategoricalInteraction)
    throw ConfigError("gme_categorical needs a categorical interest");
  if (spec.assumption == Assumption::ConditionalJoint &&
      lay.kind == InterestKind::CategoricalInteraction)
    throw ConfigError("A.II'' is undefined for separated categorical interaction components");
  const Inner in = inner_context(spec, lay);
  const InteractionVectors vecs = build_interaction_vectors(lay);
  std::vector<double> out;
  out.reserve(vecs.v.size());
  for (std::size_t l = 0; l < vecs.v.size(); ++l) {
    double c = sbar_impl(theta, lay, in, vecs.v[l], spec);
    if (!is_zero(vecs.ref[l])) c -= sbar_impl(theta, lay, in, vecs.ref[l], spec);
    out.push_back(c);
  }
  return out;
}

std::vector<double> QuantityEngine::gme_mixed(const Theta& theta, const QuantitySpec& spec) const {
  model_.check_theta(theta);
  const InterestLayout& lay = layout(spec.policy);
  if (lay.kind != InterestKind::Mixed)
    throw ConfigError("gme_mixed needs a categorical-by-metric interest");
  if (spec.assumption == Assumption::ConditionalJoint)
    throw ConfigError("mixed interaction quantities are defined under A.I / A.II' only");
  const Inner in = inner_context(spec, lay);
  const Measure mu = auto_interest_measure(spec);
  if (mu.dim() != 1)
    throw ConfigError("mixed interest takes a univariate measure for its metric part");

  const std::size_t mains = lay.main_entry_cols.size();
  const std::size_t prods = lay.product_entries.size();
  std::vector<double> out;
  out.reserve(1 + mains + prods);

  // Derivative in the metric direction with the whole categorical part off.
  out.push_back(mu.integrate1([&](double xm) {
    EvalFrame fr;
    fr.x.assign(static_cast<std::size_t>(schema_.p()), 0.0);
    fr.x[static_cast<std::size_t>(lay.metric_col)] = xm;
    for (const ProductEntry& pe : lay.product_entries)
      fr.fixed_ov.push_back(TermOverride{pe.term, 0.0});
    return inner_integral(in, lay.interest_cols, {},
                          [&](std::span<const double> mc, std::span<const TermOverride> zov) {
                            fr.fill_mc(lay.mc_cols, mc);
                            const auto ov = fr.merge(zov);
                            const double e = model_.eta(theta.beta, fr.x, spec.offset, ov);
                            return model_.dmean_deta(e) *
                                   model_.deta_dx(theta.beta, fr.x, lay.metric_col, ov);
                          });
  }));

  // Expectation with one interest configuration, metric value integrating
  // over mu; product entries multiply the live metric coordinate.
  auto stilde_integral = [&](std::span<const double> entries) {
    return mu.integrate1([&](double xm) {
      std::vector<double> x_I;
      x_I.reserve(1 + entries.size());
      x_I.push_back(xm);
      x_I.insert(x_I.end(), entries.begin(), entries.end());
      return expectation_impl(theta, lay, in, x_I, spec);
    });
  };

  const InteractionVectors vecs = build_interaction_vectors(lay);
  std::vector<double> zero(static_cast<std::size_t>(lay.n_entries()), 0.0);
  const double base = stilde_integral(zero);
  for (std::size_t l = 0; l < mains; ++l)
    out.push_back(stilde_integral(vecs.v[l]) - base);

  // Per product entry: derivative with respect to the product treated as an
  // independent copy of the metric coordinate, both integrated over mu.
  for (std::size_t k = 0; k < prods; ++k) {
    const ProductEntry& pe = lay.product_entries[k];
    const std::vector<double>& v = vecs.v[mains + k];
    const double slope_coef = model_.deta_doverride(theta.beta, pe.term);
    const Measure both = Measure::product({mu, mu});
    out.push_back(both.integrate([&](std::span<const double> xz) {
      const double xm = xz[0];
      const double copy = xz[1];
      EvalFrame fr;
      fr.x.assign(static_cast<std::size_t>(schema_.p()), 0.0);
      fr.x[static_cast<std::size_t>(lay.metric_col)] = xm;
      for (std::size_t q = 0; q < mains; ++q)
        fr.x[static_cast<std::size_t>(lay.main_entry_cols[q])] = v[q];
      for (std::size_t j = 0; j < prods; ++j) {
        const double entry = v[mains + j];
        fr.fixed_ov.push_back(
            TermOverride{lay.product_entries[j].term, j == k ? copy : entry * xm});
      }
      return inner_integral(in, lay.interest_cols, {},
                            [&](std::span<const double> mc, std::span<const TermOverride> zov) {
                              fr.fill_mc(lay.mc_cols, mc);
                              const double e =
                                  model_.eta(theta.beta, fr.x, spec.offset, fr.merge(zov));
                              return model_.dmean_deta(e) * slope_coef;
                            });
    }));
  }
  return out;
}

std::vector<double> QuantityEngine::gme(const Theta& theta, const QuantitySpec& spec) const {
  const InterestLayout& lay = layout(spec.policy);
  if (!spec.partition.empty()) return gme_partitioned(theta, spec);
  switch (lay.kind) {
    case InterestKind::Metric:
    case InterestKind::MetricInteraction:
      return {gme_metric(theta, spec)};
    case InterestKind::Categorical:
    case InterestKind::CategoricalInteraction:
      return gme_categorical(theta, spec);
    case InterestKind::Mixed:
      return gme_mixed(theta, spec);
  }
  throw ConfigError("bad interest kind");
}

std::vector<double> QuantityEngine::gme_partitioned(const Theta& theta,
                                                    const QuantitySpec& spec) const {
  const InterestLayout& lay = layout(spec.policy);
  if (lay.kind != InterestKind::Metric && lay.kind != InterestKind::MetricInteraction)
    throw ConfigError("partitioned effects need a metric interest");
  if (spec.partition.empty()) throw ConfigError("empty partition");
  const Measure mu = auto_interest_measure(spec);
  std::vector<double> out;
  out.reserve(spec.partition.size());
  for (const auto& [a, b] : spec.partition) {
    QuantitySpec cell = spec;
    cell.partition.clear();
    cell.interest_measure = mu.normalized(SupportSet::interval(a, b));
    out.push_back(gme_metric(theta, cell));
  }
  return out;
}

std::vector<std::string> QuantityEngine::gme_labels(const QuantitySpec& spec) const {
  const InterestLayout& lay = layout(spec.policy);
  if (!spec.partition.empty()) {
    std::vector<std::string> out;
    for (const auto& [a, b] : spec.partition) {
      std::ostringstream os;
      os << lay.interest_label << " in [" << a << "," << b << "]";
      out.push_back(os.str());
    }
    return out;
  }
  switch (lay.kind) {
    case InterestKind::Metric:
    case InterestKind::MetricInteraction:
      return {lay.interest_label};
    case InterestKind::Categorical:
    case InterestKind::CategoricalInteraction:
      return lay.entry_labels;
    case InterestKind::Mixed: {
      std::vector<std::string> out{lay.interest_label + " (metric part)"};
      out.insert(out.end(), lay.entry_labels.begin(), lay.entry_labels.end());
      return out;
    }
  }
  throw ConfigError("bad interest kind");
}

}  // namespace gmekit
