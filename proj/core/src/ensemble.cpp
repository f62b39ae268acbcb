#include "gmekit/ensemble.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fstream>

#include "gmekit/dataset.hpp"
#include "gmekit/errors.hpp"
#include "gmekit/rng.hpp"

namespace gmekit {

namespace {

double parse_cell(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v))
    throw DataError("draws file cell '" + s + "' is not a finite number");
  return v;
}

}  // namespace

ThetaEnsemble make_ensemble_normal(const Theta& theta_hat,
                                   const std::vector<std::vector<double>>& cov,
                                   std::size_t n_draws, std::uint64_t seed) {
  const std::size_t k = theta_hat.beta.size();
  if (cov.size() != k) throw ConfigError("covariance does not match the coefficient count");
  for (const auto& row : cov)
    if (row.size() != k) throw ConfigError("covariance matrix is not square");
  if (n_draws == 0) throw ConfigError("ensemble needs at least one draw");

  Eigen::MatrixXd c(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) c(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(j)) = cov[i][j];
  c = 0.5 * (c + c.transpose().eval());

  ThetaEnsemble out;
  out.seed = seed;
  out.provenance = "normal-approximation";

  Eigen::MatrixXd root;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() == Eigen::Success) {
    root = llt.matrixL();
  } else {
    // Covariances from near-degenerate fits can lose positive definiteness to
    // rounding; clip eigenvalues and flag the repair.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double floor_ev = 1e-12 * std::max(0.0, ev.maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor_ev);
    root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
    out.covariance_adjusted = true;
  }

  out.draws.reserve(n_draws);
  Eigen::VectorXd z(k);
  for (std::size_t d = 0; d < n_draws; ++d) {
    for (std::size_t j = 0; j < k; ++j)
      z(static_cast<Eigen::Index>(j)) = rng::normal(seed, d, j);
    const Eigen::VectorXd b = root * z;
    Theta t = theta_hat;
    for (std::size_t j = 0; j < k; ++j) t.beta[j] += b(static_cast<Eigen::Index>(j));
    out.draws.push_back(std::move(t));
  }
  return out;
}

ThetaEnsemble ensemble_from_draws(std::vector<Theta> draws, std::string provenance) {
  if (draws.empty()) throw ConfigError("ensemble needs at least one draw");
  const std::size_t k = draws.front().beta.size();
  const std::size_t vk = draws.front().v.size();
  for (const Theta& t : draws)
    if (t.beta.size() != k || t.v.size() != vk)
      throw ConfigError("ensemble draws have inconsistent dimensions");
  ThetaEnsemble out;
  out.draws = std::move(draws);
  out.provenance = std::move(provenance);
  return out;
}

ThetaEnsemble read_draws_csv(const std::string& path, int beta_len, int v_len) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open draws file '" + path + "'");
  const Dataset d = read_csv(in);
  const std::size_t want = static_cast<std::size_t>(beta_len + v_len);
  if (d.names.size() != want)
    throw DataError("draws file has " + std::to_string(d.names.size()) + " columns, expected " +
                    std::to_string(want));
  std::vector<Theta> draws;
  draws.reserve(d.n());
  for (const auto& row : d.rows) {
    Theta t;
    t.beta.reserve(static_cast<std::size_t>(beta_len));
    t.v.reserve(static_cast<std::size_t>(v_len));
    for (int j = 0; j < beta_len; ++j) t.beta.push_back(parse_cell(row[static_cast<std::size_t>(j)]));
    for (int j = 0; j < v_len; ++j)
      t.v.push_back(parse_cell(row[static_cast<std::size_t>(beta_len + j)]));
    draws.push_back(std::move(t));
  }
  return ensemble_from_draws(std::move(draws), "draws:" + path);
}

}  // namespace gmekit
