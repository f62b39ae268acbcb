#include "gmekit/fit.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "gmekit/errors.hpp"

namespace gmekit {

ParametricModel default_terms_model(const RegressorSchema& schema, Family family) {
  std::vector<Term> terms;
  int coef = 0;
  terms.push_back(Term{coef++, {}});
  for (int j = 0; j < schema.p(); ++j) terms.push_back(Term{coef++, {j}});
  for (const auto& ia : schema.spec().interactions) {
    const CompiledColumn& a = schema.column(ia.columns[0]);
    const CompiledColumn& b = schema.column(ia.columns[1]);
    for (int ja = 0; ja < a.width; ++ja)
      for (int jb = 0; jb < b.width; ++jb)
        terms.push_back(Term{coef++, {a.offset + ja, b.offset + jb}});
  }
  const int v_len = family == Family::GaussianIdentity ? 1 : 0;
  return ParametricModel(family, std::move(terms), coef, v_len, schema.p());
}

namespace {

Eigen::MatrixXd design_matrix(const ParametricModel& model, const EncodedData& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto k = static_cast<Eigen::Index>(model.beta_len());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& x = data.x[static_cast<std::size_t>(i)];
    for (const Term& t : model.terms()) {
      double prod = 1.0;
      for (int f : t.factors) prod *= x[static_cast<std::size_t>(f)];
      z(i, t.coef) += prod;
    }
  }
  return z;
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return out;
}

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError(std::string(what) + ": normal equations are not positive definite; "
                       "check for collinear regressors");
  return ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

FitResult fit_gaussian(const ParametricModel& model, const EncodedData& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto k = static_cast<Eigen::Index>(model.beta_len());
  if (n <= k)
    throw DataError("gaussian fit needs more rows than coefficients (" + std::to_string(n) +
                    " <= " + std::to_string(k) + ")");
  const Eigen::MatrixXd z = design_matrix(model, data);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i)
    y(i) = data.y[static_cast<std::size_t>(i)] - data.offset_at(static_cast<std::size_t>(i));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() < k)
    throw NumericError("design matrix is rank deficient; check for collinear regressors");
  const Eigen::VectorXd beta = qr.solve(y);
  const double rss = (y - z * beta).squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - k);

  FitResult out;
  out.theta.beta.assign(beta.data(), beta.data() + k);
  out.theta.v = {sigma2};
  out.deviance = rss;
  out.iterations = 1;
  out.cov = to_rows(sigma2 * solve_spd(z.transpose() * z, "gaussian fit"));
  return out;
}

FitResult fit_irls(const ParametricModel& model, const EncodedData& data, const FitOptions& opt) {
  const bool logit = model.family() == Family::BinomialLogit;
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto k = static_cast<Eigen::Index>(model.beta_len());
  if (n < k) throw DataError("fewer rows than coefficients");
  const Eigen::MatrixXd z = design_matrix(model, data);
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(z).rank() < k)
    throw NumericError("design matrix is rank deficient; check for collinear regressors");

  Eigen::VectorXd y(n), off(n), w_prior(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    y(i) = data.y[u];
    off(i) = data.offset_at(u);
    w_prior(i) = data.trials_at(u);
    if (logit) {
      if (y(i) < 0.0 || y(i) > 1.0)
        throw DataError("binomial outcome must be a share in [0,1]; row " + std::to_string(i));
      if (!(w_prior(i) > 0.0)) throw DataError("binomial trials must be positive");
    } else if (y(i) < 0.0) {
      throw DataError("poisson outcome must be non-negative; row " + std::to_string(i));
    }
  }

  auto deviance_of = [&](const Eigen::VectorXd& mu) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (logit)
        dev += 2.0 * w_prior(i) *
               (xlogy(y(i), y(i) / mu(i)) + xlogy(1.0 - y(i), (1.0 - y(i)) / (1.0 - mu(i))));
      else
        dev += 2.0 * (xlogy(y(i), y(i) / mu(i)) - (y(i) - mu(i)));
    }
    return dev;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta = z * beta + off;
  auto mean_of = [&](const Eigen::VectorXd& e) {
    Eigen::VectorXd mu(n);
    for (Eigen::Index i = 0; i < n; ++i)
      mu(i) = logit ? 1.0 / (1.0 + std::exp(-e(i))) : std::exp(e(i));
    return mu;
  };
  Eigen::VectorXd mu = mean_of(eta);
  double dev = deviance_of(mu);

  Eigen::MatrixXd info;
  int iter = 0;
  bool converged = false;
  for (; iter < opt.max_iter; ++iter) {
    Eigen::VectorXd w(n), target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double var = logit ? mu(i) * (1.0 - mu(i)) : mu(i);
      if (!(var > 1e-300)) throw NumericError("IRLS weights collapsed; the fit is degenerate");
      w(i) = w_prior(i) * var;
      target(i) = (eta(i) - off(i)) + (y(i) - mu(i)) / var;
    }
    info = z.transpose() * w.asDiagonal() * z;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericError("IRLS normal equations are not positive definite; check for collinear "
                         "regressors");
    beta = ldlt.solve(z.transpose() * (w.asDiagonal() * target));
    eta = z * beta + off;
    mu = mean_of(eta);
    const double dev_new = deviance_of(mu);
    if (!std::isfinite(dev_new)) throw NumericError("IRLS deviance diverged");
    const bool done = std::abs(dev - dev_new) < opt.tol;
    dev = dev_new;
    if (done) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged)
    throw NumericError("IRLS did not converge in " + std::to_string(opt.max_iter) +
                       " iterations; the likelihood may be unbounded (separated data)");
  if (logit && dev < 1e-6) {
    // Perfect fit of binary shares with huge linear predictors means the MLE
    // ran off to infinity.
    bool all_extreme = true;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(eta(i)) <= 25.0) all_extreme = false;
    if (all_extreme)
      throw NumericError("the outcome is perfectly separated; coefficients are not identified");
  }

  FitResult out;
  out.theta.beta.assign(beta.data(), beta.data() + k);
  out.deviance = dev;
  out.iterations = iter;
  out.cov = to_rows(solve_spd(info, "IRLS"));
  return out;
}

}  // namespace

FitResult fit_model(const ParametricModel& model, const EncodedData& data, const FitOptions& opt) {
  if (data.n() == 0) throw DataError("cannot fit on an empty dataset");
  if (data.y.size() != data.n()) throw DataError("outcome column is missing or incomplete");
  if (model.family() == Family::GaussianIdentity) return fit_gaussian(model, data);
  return fit_irls(model, data, opt);
}

}  // namespace gmekit
