#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmekit/dataset.hpp"
#include "gmekit/measure.hpp"
#include "gmekit/model.hpp"

namespace gmekit {

// Dependence structure assumed between the interest block and the remaining
// regressors. Independent: everything independent, covariates integrate under
// a product measure. MarginalJoint: covariates keep their joint (empirical)
// law, interest varied freely. ConditionalJoint: covariates follow their
// conditional law given the interest value (exact-match conditioning).
enum class Assumption { Independent, MarginalJoint, ConditionalJoint };

Assumption assumption_from_string(const std::string& s);
std::string assumption_to_string(Assumption a);

// Combined: interactions involving the interest move with it (chain rule /
// full contrasts). Separated: interaction products are treated as independent
// regressors of their own and quantified as extra components.
enum class InteractionPolicy { Combined, Separated };

struct QuantitySpec {
  Assumption assumption = Assumption::Independent;
  InteractionPolicy policy = InteractionPolicy::Combined;
  std::optional<Measure> interest_measure;   // mu (effects) or mu_I (expectations)
  std::optional<Measure> covariate_measure;  // fixed mu-bar; unset = auto from data
  std::optional<SupportSet> covariate_set;   // normalize mu-bar to this set
  std::vector<std::pair<double, double>> partition;  // metric effects per cell
  double offset = 0.0;  // offset value used when evaluating at synthetic points
};

enum class InterestKind {
  Metric,                  // one metric column
  Categorical,             // one categorical block, combined evaluation
  MetricInteraction,       // metric*metric product as its own regressor
  CategoricalInteraction,  // stacked categorical blocks + product entries
  Mixed                    // categorical block interacting with one metric
};

// Interaction entry of a stacked categorical interest vector: the model term
// whose product is driven by this entry, plus the positions of the main
// entries that are switched on together with it.
struct ProductEntry {
  int term = -1;
  std::vector<int> include_positions;
};

struct InterestLayout {
  InterestKind kind = InterestKind::Metric;
  std::vector<int> interest_cols;  // encoded indices consumed by the interest
  std::vector<int> mc_cols;        // remaining encoded indices, schema order
  std::vector<int> mc_columns;     // schema column ids of the remaining columns
  int metric_col = -1;             // Metric / Mixed
  std::vector<int> main_entry_cols;          // encoded index per main entry
  std::vector<ProductEntry> product_entries;
  std::vector<int> z_terms;     // separated: higher-order terms hived off
  int interest_term = -1;       // MetricInteraction
  std::vector<int> met_factors; // MetricInteraction: the two factor columns
  std::string interest_label;
  std::vector<std::string> entry_labels;  // one per main/product entry

  int n_entries() const {
    return static_cast<int>(main_entry_cols.size() + product_entries.size());
  }
  int d_I() const;
};

struct InteractionVectors {
  // Per component l: v[l] has entry l and its included mains on; ref[l] is
  // v[l] with entry l switched off (the zero vector for main entries).
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> ref;
};

InterestLayout resolve_interest(const RegressorSchema& schema, const ParametricModel& model,
                                InteractionPolicy policy);
InteractionVectors build_interaction_vectors(const InterestLayout& layout);

class QuantityEngine {
 public:
  QuantityEngine(ParametricModel model, RegressorSchema schema, EncodedData data = {});

  const ParametricModel& model() const { return model_; }
  const RegressorSchema& schema() const { return schema_; }
  const EncodedData& data() const { return data_; }

  // Prop-3.4-style endpoint fast paths re-verify against quadrature when on.
  void set_cross_check(bool on) { cross_check_ = on; }
  bool cross_check() const { return cross_check_; }

  const InterestLayout& layout(InteractionPolicy policy) const;

  // Expectation averaged over the covariate law, interest held at x_I.
  // Metric-style interest: x_I has one entry. Categorical: x_I is the entry
  // vector (0/1 per main and product entry).
  double averaged_expectation(const Theta& theta, std::span<const double> x_I,
                              const QuantitySpec& spec) const;

  // Expectation averaged over interest and covariates together.
  double individualized_expectation(const Theta& theta, const QuantitySpec& spec) const;

  // Covariate-averaged effect at one interest value: derivative for metric
  // interest, contrast against the zero block for categorical interest.
  double slope_of_expectation(const Theta& theta, std::span<const double> x_I,
                              const QuantitySpec& spec) const;

  double gme_metric(const Theta& theta, const QuantitySpec& spec) const;
  double gme_metric_quadrature(const Theta& theta, const QuantitySpec& spec) const;
  std::vector<double> gme_categorical(const Theta& theta, const QuantitySpec& spec) const;
  std::vector<double> gme_mixed(const Theta& theta, const QuantitySpec& spec) const;

  // Dispatch on the interest declared in the schema.
  std::vector<double> gme(const Theta& theta, const QuantitySpec& spec) const;
  std::vector<std::string> gme_labels(const QuantitySpec& spec) const;

  // Metric interest only: one effect per partition cell, interest measure
  // normalized to each cell.
  std::vector<double> gme_partitioned(const Theta& theta, const QuantitySpec& spec) const;

  Measure auto_interest_measure(const QuantitySpec& spec) const;

 private:
  struct Inner;  // resolved covariate integration context
  Inner inner_context(const QuantitySpec& spec, const InterestLayout& lay) const;
  Measure conditional_measure(std::span<const int> on_cols, std::span<const double> value,
                              const std::optional<SupportSet>& normalize_to) const;
  double inner_integral(
      const Inner& in, std::span<const int> cond_cols, std::span<const double> cond_value,
      const std::function<double(std::span<const double>, std::span<const TermOverride>)>& f) const;
  Measure univariate_column_measure(int encoded_col, const QuantitySpec& spec,
                                    const InterestLayout& lay) const;

  double expectation_impl(const Theta& theta, const InterestLayout& lay, const Inner& in,
                          std::span<const double> x_I, const QuantitySpec& spec) const;
  double metric_slope_impl(const Theta& theta, const InterestLayout& lay, const Inner& in,
                           double x_I, const QuantitySpec& spec) const;
  double sbar_impl(const Theta& theta, const InterestLayout& lay, const Inner& in,
                   std::span<const double> entries, const QuantitySpec& spec) const;

  ParametricModel model_;
  RegressorSchema schema_;
  EncodedData data_;
  bool cross_check_;
  mutable std::map<std::vector<double>, Measure> conditional_cache_;
  mutable std::optional<InterestLayout> layout_combined_;
  mutable std::optional<InterestLayout> layout_separated_;
};

}  // namespace gmekit
