#include "gmekit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmekit/errors.hpp"

namespace gmekit {

Family family_from_string(const std::string& s) {
  if (s == "gaussian-identity") return Family::GaussianIdentity;
  if (s == "binomial-logit") return Family::BinomialLogit;
  if (s == "poisson-log") return Family::PoissonLog;
  throw ConfigError("unknown family '" + s + "'");
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::GaussianIdentity: return "gaussian-identity";
    case Family::BinomialLogit: return "binomial-logit";
    case Family::PoissonLog: return "poisson-log";
  }
  throw ConfigError("bad family enum");
}

ParametricModel::ParametricModel(Family family, std::vector<Term> terms, int beta_len, int v_len,
                                 int p)
    : family_(family), terms_(std::move(terms)), beta_len_(beta_len), v_len_(v_len), p_(p) {
  if (beta_len_ <= 0) throw ConfigError("model needs at least one coefficient");
  if (p_ < 0) throw ConfigError("negative regressor count");
  std::vector<bool> used(static_cast<std::size_t>(beta_len_), false);
  for (const Term& t : terms_) {
    if (t.coef < 0 || t.coef >= beta_len_)
      throw ConfigError("term coefficient index " + std::to_string(t.coef) + " out of range");
    used[static_cast<std::size_t>(t.coef)] = true;
    for (int f : t.factors)
      if (f < 0 || f >= p_)
        throw ConfigError("term factor index " + std::to_string(f) + " out of range");
  }
  for (int c = 0; c < beta_len_; ++c)
    if (!used[static_cast<std::size_t>(c)])
      throw ConfigError("coefficient " + std::to_string(c) + " is not used by any term");
}

namespace {
bool overridden(std::span<const TermOverride> ov, int term, double* value) {
  for (const TermOverride& o : ov) {
    if (o.term == term) {
      *value = o.value;
      return true;
    }
  }
  return false;
}
}  // namespace

double ParametricModel::eta(std::span<const double> beta, std::span<const double> x, double offset,
                            std::span<const TermOverride> overrides) const {
  double acc = offset;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const Term& term = terms_[t];
    double prod;
    if (!overridden(overrides, static_cast<int>(t), &prod)) {
      prod = 1.0;
      for (int f : term.factors) prod *= x[static_cast<std::size_t>(f)];
    }
    acc += beta[static_cast<std::size_t>(term.coef)] * prod;
  }
  return acc;
}

double ParametricModel::mean_from_eta(double eta) const {
  const double e = std::clamp(eta, -kEtaSaturation, kEtaSaturation);
  switch (family_) {
    case Family::GaussianIdentity:
      return e;
    case Family::BinomialLogit: {
      const double p = 1.0 / (1.0 + std::exp(-e));
      // sigma rounds to 1.0 in double well before the saturation point; keep
      // predictions strictly inside (0,1).
      return std::min(p, std::nextafter(1.0, 0.0));
    }
    case Family::PoissonLog:
      return std::exp(e);
  }
  throw ConfigError("bad family enum");
}

double ParametricModel::dmean_deta(double eta) const {
  const double e = std::clamp(eta, -kEtaSaturation, kEtaSaturation);
  switch (family_) {
    case Family::GaussianIdentity:
      return 1.0;
    case Family::BinomialLogit: {
      const double p = 1.0 / (1.0 + std::exp(-e));
      return p * (1.0 - p);
    }
    case Family::PoissonLog:
      return std::exp(e);
  }
  throw ConfigError("bad family enum");
}

double ParametricModel::mean(const Theta& theta, std::span<const double> x, double offset,
                             std::span<const TermOverride> overrides) const {
  return mean_from_eta(eta(theta.beta, x, offset, overrides));
}

double ParametricModel::deta_dx(std::span<const double> beta, std::span<const double> x, int j,
                                std::span<const TermOverride> overrides) const {
  double acc = 0.0;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    double unused;
    if (overridden(overrides, static_cast<int>(t), &unused)) continue;
    const Term& term = terms_[t];
    // Product rule over occurrences, so a repeated factor differentiates to
    // occ * x^(occ-1) * rest without special casing.
    for (std::size_t k = 0; k < term.factors.size(); ++k) {
      if (term.factors[k] != j) continue;
      double prod = 1.0;
      for (std::size_t m = 0; m < term.factors.size(); ++m) {
        if (m == k) continue;
        prod *= x[static_cast<std::size_t>(term.factors[m])];
      }
      acc += beta[static_cast<std::size_t>(term.coef)] * prod;
    }
  }
  return acc;
}

double ParametricModel::deta_doverride(std::span<const double> beta, int term) const {
  if (term < 0 || term >= static_cast<int>(terms_.size()))
    throw ConfigError("term index out of range");
  return beta[static_cast<std::size_t>(terms_[static_cast<std::size_t>(term)].coef)];
}

int ParametricModel::find_term(std::span<const int> factors) const {
  std::vector<int> want(factors.begin(), factors.end());
  std::sort(want.begin(), want.end());
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    std::vector<int> have = terms_[t].factors;
    std::sort(have.begin(), have.end());
    if (have == want) return static_cast<int>(t);
  }
  return -1;
}

std::vector<int> ParametricModel::terms_containing(std::span<const int> factors) const {
  std::vector<int> out;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const auto& f = terms_[t].factors;
    bool all = true;
    for (int want : factors)
      if (std::find(f.begin(), f.end(), want) == f.end()) {
        all = false;
        break;
      }
    if (all && f.size() > factors.size()) out.push_back(static_cast<int>(t));
  }
  return out;
}

void ParametricModel::check_theta(const Theta& theta) const {
  if (static_cast<int>(theta.beta.size()) != beta_len_)
    throw ConfigError("theta.beta has " + std::to_string(theta.beta.size()) + " entries, model expects " +
                      std::to_string(beta_len_));
  if (static_cast<int>(theta.v.size()) != v_len_)
    throw ConfigError("theta.v has " + std::to_string(theta.v.size()) + " entries, model expects " +
                      std::to_string(v_len_));
}

std::vector<double> local_slope(const ParametricModel& model, const RegressorSchema& schema,
                                const Theta& theta, std::span<const double> x,
                                const std::string& interest_column, double offset) {
  model.check_theta(theta);
  const CompiledColumn& col = schema.column(interest_column);
  if (col.kind == ColumnKind::Metric) {
    const double e = model.eta(theta.beta, x, offset);
    return {model.dmean_deta(e) * model.deta_dx(theta.beta, x, col.offset)};
  }
  std::vector<double> work(x.begin(), x.end());
  for (int j = 0; j < col.width; ++j) work[static_cast<std::size_t>(col.offset + j)] = 0.0;
  const double base = model.mean(theta, work, offset);
  std::vector<double> out(static_cast<std::size_t>(col.width));
  for (int j = 0; j < col.width; ++j) {
    work[static_cast<std::size_t>(col.offset + j)] = 1.0;
    out[static_cast<std::size_t>(j)] = model.mean(theta, work, offset) - base;
    work[static_cast<std::size_t>(col.offset + j)] = 0.0;
  }
  return out;
}

}  // namespace gmekit
