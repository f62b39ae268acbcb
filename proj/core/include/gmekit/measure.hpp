#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace gmekit {

// Admissible target sets for restriction / normalization and for membership
// tests (indicator in the z transform, basis checks for dummy blocks).
class SupportSet {
 public:
  enum class Kind { Interval, FinitePoints, Basis, Product };

  static SupportSet interval(double a, double b);
  static SupportSet finite_points(std::vector<std::vector<double>> pts);  // exact dedup
  static SupportSet finite_scalars(std::vector<double> pts);
  static SupportSet basis(int d);  // {e_1..e_d} and the zero vector in R^d
  static SupportSet product(std::vector<SupportSet> parts);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool contains(std::span<const double> x) const;
  bool contains1(double x) const;

  // Interval bounds, or min/max of a scalar finite set.
  double lo() const;
  double hi() const;

  const std::vector<SupportSet>& parts() const { return parts_; }
  const std::vector<std::vector<double>>& points() const { return pts_; }

 private:
  Kind kind_ = Kind::Interval;
  int dim_ = 1;
  double a_ = 0.0, b_ = 0.0;
  std::vector<std::vector<double>> pts_;
  std::vector<SupportSet> parts_;
};

struct Quadrature {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;  // sum to 2
};

// Cached Gauss-Legendre rule; nodes by Newton iteration, accurate to ~1e-15.
const Quadrature& gauss_legendre(int n);

inline constexpr int kUniformQuadratureNodes = 64;
inline constexpr std::size_t kInteractionSampleCount = 4096;

// Probability measure on R^d. Every variant integrates exactly or by a fixed
// deterministic rule; there is no adaptive state, so results are reproducible
// bit-for-bit for a given build.
class Measure {
 public:
  enum class Kind { Dirac, Discrete, Uniform, Product, Empirical, Interaction };

  static Measure dirac(std::vector<double> point);
  static Measure dirac1(double point);
  static Measure discrete(std::vector<std::vector<double>> points, std::vector<double> weights);
  static Measure discrete_scalar(std::vector<double> points, std::vector<double> weights);
  static Measure uniform(double a, double b);
  static Measure product(std::vector<Measure> parts);

  // Weighted empirical law of the rows; duplicate rows merge their mass.
  static Measure empirical_joint(std::span<const std::vector<double>> rows,
                                 std::span<const double> weights = {});
  static Measure empirical_marginal(std::span<const std::vector<double>> rows,
                                    std::span<const int> keep_cols);
  // Rows matching `value` exactly on `on_cols`; those coordinates are dropped.
  static Measure empirical_conditional(std::span<const std::vector<double>> rows,
                                       std::span<const int> on_cols,
                                       std::span<const double> value);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  double integrate(const std::function<double(std::span<const double>)>& h) const;
  double integrate1(const std::function<double(double)>& h) const;

  double mass_in(const SupportSet& set) const;
  Measure normalized(const SupportSet& set) const;
  const std::optional<SupportSet>& normalized_to() const { return normalized_to_; }

  bool is_pointwise() const;  // Dirac / Discrete / Empirical / Interaction
  const std::vector<std::vector<double>>& points() const;
  const std::vector<double>& weights() const;
  double uniform_lo() const;
  double uniform_hi() const;
  const std::vector<Measure>& parts() const { return parts_; }
  std::uint64_t sampling_seed() const { return seed_; }

  // Deterministic stratified quantile samples, univariate measures only.
  std::vector<double> stratified_samples(std::size_t n, std::uint64_t seed,
                                         std::uint64_t stream) const;

 private:
  friend Measure interaction_measure(const Measure&, const Measure&, std::uint64_t);

  Kind kind_ = Kind::Dirac;
  int dim_ = 0;
  std::vector<std::vector<double>> pts_;
  std::vector<double> w_;
  double a_ = 0.0, b_ = 0.0;
  std::vector<Measure> parts_;
  std::optional<SupportSet> normalized_to_;
  std::uint64_t seed_ = 0;
};

// Push-forward of the product of two independent univariate draws.
// Discrete x discrete is enumerated exactly; anything involving a continuous
// factor is realized by stratified sampling with a recorded seed.
Measure interaction_measure(const Measure& m1, const Measure& m2, std::uint64_t seed = 0);

}  // namespace gmekit
