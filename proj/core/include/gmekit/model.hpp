#pragma once

#include <span>
#include <string>
#include <vector>

#include "gmekit/schema.hpp"

namespace gmekit {

enum class Family { GaussianIdentity, BinomialLogit, PoissonLog };

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);

// One additive term of the linear predictor: beta[coef] * prod_j x[factors[j]].
// Empty factors = intercept. Factors are encoded regressor indices.
struct Term {
  int coef = -1;
  std::vector<int> factors;
};

struct Theta {
  std::vector<double> beta;
  std::vector<double> v;  // auxiliary components (gaussian: v[0] = sigma^2)
};

// Replaces the factor product of one term by a fixed value, leaving beta[coef]
// in place. Used wherever an interaction product is treated as its own
// regressor (separated-effects evaluation, independent copies).
struct TermOverride {
  int term = -1;
  double value = 0.0;
};

// Linear predictor is saturated at +/-700 before the inverse link, and the
// logit mean is kept strictly inside (0,1) even where sigma rounds to 1.
inline constexpr double kEtaSaturation = 700.0;

class ParametricModel {
 public:
  ParametricModel(Family family, std::vector<Term> terms, int beta_len, int v_len, int p);

  Family family() const { return family_; }
  const std::vector<Term>& terms() const { return terms_; }
  int beta_len() const { return beta_len_; }
  int v_len() const { return v_len_; }
  int p() const { return p_; }

  double eta(std::span<const double> beta, std::span<const double> x, double offset = 0.0,
             std::span<const TermOverride> overrides = {}) const;

  double mean_from_eta(double eta) const;
  double dmean_deta(double eta) const;

  double mean(const Theta& theta, std::span<const double> x, double offset = 0.0,
              std::span<const TermOverride> overrides = {}) const;

  // d(eta)/d(x[j]); overridden terms no longer depend on x and are skipped.
  double deta_dx(std::span<const double> beta, std::span<const double> x, int j,
                 std::span<const TermOverride> overrides = {}) const;

  // d(eta)/d(value of an overridden term) = beta[coef of term].
  double deta_doverride(std::span<const double> beta, int term) const;

  // Term whose factor multiset equals `factors`; -1 when absent.
  int find_term(std::span<const int> factors) const;

  // Terms whose factor set strictly contains all of `factors` (higher-order
  // terms hived off when an effect is quantified separately).
  std::vector<int> terms_containing(std::span<const int> factors) const;

  void check_theta(const Theta& theta) const;

 private:
  Family family_;
  std::vector<Term> terms_;
  int beta_len_ = 0;
  int v_len_ = 0;
  int p_ = 0;
};

// Local effect at a fixed x, interactions evaluated as-is (combined).
// Metric interest: analytic derivative, one component. Categorical: one
// component per non-reference category, g(x | block=e_l) - g(x | block=0).
std::vector<double> local_slope(const ParametricModel& model, const RegressorSchema& schema,
                                const Theta& theta, std::span<const double> x,
                                const std::string& interest_column, double offset = 0.0);

}  // namespace gmekit
