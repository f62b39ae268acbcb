#include "gmekit/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "gmekit/errors.hpp"
#include "gmekit/rng.hpp"
#include "gmekit/util.hpp"

namespace gmekit {

// ---------------------------------------------------------------------------
// SupportSet

SupportSet SupportSet::interval(double a, double b) {
  if (!(a < b)) throw ConfigError("interval needs a < b");
  SupportSet s;
  s.kind_ = Kind::Interval;
  s.dim_ = 1;
  s.a_ = a;
  s.b_ = b;
  return s;
}

SupportSet SupportSet::finite_points(std::vector<std::vector<double>> pts) {
  if (pts.empty()) throw ConfigError("finite point set is empty");
  const int d = static_cast<int>(pts.front().size());
  std::map<std::vector<double>, bool> dedup;
  for (auto& p : pts) {
    if (static_cast<int>(p.size()) != d) throw ConfigError("finite point set has mixed dimensions");
    dedup.emplace(std::move(p), true);
  }
  SupportSet s;
  s.kind_ = Kind::FinitePoints;
  s.dim_ = d;
  for (auto& [p, unused] : dedup) s.pts_.push_back(p);
  return s;
}

SupportSet SupportSet::finite_scalars(std::vector<double> pts) {
  std::vector<std::vector<double>> rows;
  rows.reserve(pts.size());
  for (double v : pts) rows.push_back({v});
  return finite_points(std::move(rows));
}

SupportSet SupportSet::basis(int d) {
  if (d < 1) throw ConfigError("basis set needs dimension >= 1");
  SupportSet s;
  s.kind_ = Kind::Basis;
  s.dim_ = d;
  return s;
}

SupportSet SupportSet::product(std::vector<SupportSet> parts) {
  if (parts.empty()) throw ConfigError("product set with no parts");
  SupportSet s;
  s.kind_ = Kind::Product;
  s.dim_ = 0;
  for (const auto& p : parts) s.dim_ += p.dim();
  s.parts_ = std::move(parts);
  return s;
}

bool SupportSet::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw ConfigError("point dimension does not match the set");
  switch (kind_) {
    case Kind::Interval:
      return x[0] >= a_ && x[0] <= b_;
    case Kind::FinitePoints:
      for (const auto& p : pts_)
        if (std::equal(p.begin(), p.end(), x.begin())) return true;
      return false;
    case Kind::Basis: {
      int ones = 0;
      for (double v : x) {
        if (v == 1.0)
          ++ones;
        else if (v != 0.0)
          return false;
      }
      return ones <= 1;
    }
    case Kind::Product: {
      std::size_t off = 0;
      for (const auto& part : parts_) {
        if (!part.contains(x.subspan(off, static_cast<std::size_t>(part.dim())))) return false;
        off += static_cast<std::size_t>(part.dim());
      }
      return true;
    }
  }
  throw ConfigError("bad support-set kind");
}

bool SupportSet::contains1(double x) const { return contains(std::span<const double>(&x, 1)); }

double SupportSet::lo() const {
  if (kind_ == Kind::Interval) return a_;
  if (kind_ == Kind::FinitePoints && dim_ == 1) {
    double m = pts_.front()[0];
    for (const auto& p : pts_) m = std::min(m, p[0]);
    return m;
  }
  throw ConfigError("lo() needs an interval or scalar point set");
}

double SupportSet::hi() const {
  if (kind_ == Kind::Interval) return b_;
  if (kind_ == Kind::FinitePoints && dim_ == 1) {
    double m = pts_.front()[0];
    for (const auto& p : pts_) m = std::max(m, p[0]);
    return m;
  }
  throw ConfigError("hi() needs an interval or scalar point set");
}

// ---------------------------------------------------------------------------
// Gauss-Legendre

namespace {
Quadrature compute_gauss_legendre(int n) {
  Quadrature q;
  q.nodes.assign(static_cast<std::size_t>(n), 0.0);
  q.weights.assign(static_cast<std::size_t>(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - static_cast<double>(j) * p2) / (static_cast<double>(j) + 1.0);
      }
      pp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const std::size_t a = static_cast<std::size_t>(i);
    const std::size_t b = static_cast<std::size_t>(n - 1 - i);
    q.nodes[a] = -x;
    q.nodes[b] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    q.weights[a] = w;
    q.weights[b] = w;
  }
  if (n % 2 == 1) q.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return q;
}
}  // namespace

const Quadrature& gauss_legendre(int n) {
  if (n < 1) throw ConfigError("quadrature order must be positive");
  static std::mutex mu;
  static std::map<int, Quadrature> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

// ---------------------------------------------------------------------------
// Measure

namespace {

void check_weights(const std::vector<double>& w) {
  for (double x : w)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ConfigError("measure weights must be finite and non-negative");
}

// Merge duplicate atoms and normalize total mass to 1 exactly.
void canonicalize(std::vector<std::vector<double>>* pts, std::vector<double>* w) {
  std::map<std::vector<double>, double> acc;
  for (std::size_t i = 0; i < pts->size(); ++i) acc[(*pts)[i]] += (*w)[i];
  double total = 0.0;
  for (auto& [p, m] : acc) total += m;
  if (!(total > 0.0)) throw NumericError("measure has zero total mass");
  pts->clear();
  w->clear();
  for (auto& [p, m] : acc) {
    if (m == 0.0) continue;
    pts->push_back(p);
    w->push_back(m / total);
  }
}

double checked(double v) {
  if (!std::isfinite(v)) throw NumericError("integrand evaluated to a non-finite value");
  return v;
}

}  // namespace

Measure Measure::dirac(std::vector<double> point) {
  if (point.empty()) throw ConfigError("dirac point is empty");
  Measure m;
  m.kind_ = Kind::Dirac;
  m.dim_ = static_cast<int>(point.size());
  m.pts_.push_back(std::move(point));
  m.w_.push_back(1.0);
  return m;
}

Measure Measure::dirac1(double point) { return dirac(std::vector<double>{point}); }

Measure Measure::discrete(std::vector<std::vector<double>> points, std::vector<double> weights) {
  if (points.empty()) throw ConfigError("discrete measure with no points");
  if (points.size() != weights.size())
    throw ConfigError("discrete measure: points and weights differ in length");
  const int d = static_cast<int>(points.front().size());
  for (const auto& p : points)
    if (static_cast<int>(p.size()) != d)
      throw ConfigError("discrete measure has mixed point dimensions");
  check_weights(weights);
  canonicalize(&points, &weights);
  Measure m;
  m.kind_ = Kind::Discrete;
  m.dim_ = d;
  m.pts_ = std::move(points);
  m.w_ = std::move(weights);
  return m;
}

Measure Measure::discrete_scalar(std::vector<double> points, std::vector<double> weights) {
  std::vector<std::vector<double>> rows;
  rows.reserve(points.size());
  for (double v : points) rows.push_back({v});
  return discrete(std::move(rows), std::move(weights));
}

Measure Measure::uniform(double a, double b) {
  if (!(a < b)) throw ConfigError("uniform measure needs a < b");
  if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("uniform bounds must be finite");
  Measure m;
  m.kind_ = Kind::Uniform;
  m.dim_ = 1;
  m.a_ = a;
  m.b_ = b;
  return m;
}

Measure Measure::product(std::vector<Measure> parts) {
  if (parts.empty()) throw ConfigError("product measure with no parts");
  if (parts.size() == 1) return std::move(parts.front());
  Measure m;
  m.kind_ = Kind::Product;
  m.dim_ = 0;
  for (const auto& p : parts) m.dim_ += p.dim();
  m.parts_ = std::move(parts);
  return m;
}

Measure Measure::empirical_joint(std::span<const std::vector<double>> rows,
                                 std::span<const double> weights) {
  if (rows.empty()) throw DataError("empirical measure over zero rows");
  std::vector<std::vector<double>> pts(rows.begin(), rows.end());
  std::vector<double> w;
  if (weights.empty())
    w.assign(rows.size(), 1.0);
  else {
    if (weights.size() != rows.size())
      throw ConfigError("empirical weights length does not match rows");
    w.assign(weights.begin(), weights.end());
    check_weights(w);
  }
  canonicalize(&pts, &w);
  Measure m;
  m.kind_ = Kind::Empirical;
  m.dim_ = static_cast<int>(pts.front().size());
  m.pts_ = std::move(pts);
  m.w_ = std::move(w);
  return m;
}

Measure Measure::empirical_marginal(std::span<const std::vector<double>> rows,
                                    std::span<const int> keep_cols) {
  if (rows.empty()) throw DataError("empirical measure over zero rows");
  if (keep_cols.empty()) throw ConfigError("empirical marginal keeps no coordinates");
  std::vector<std::vector<double>> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<double> p;
    p.reserve(keep_cols.size());
    for (int c : keep_cols) {
      if (c < 0 || c >= static_cast<int>(r.size()))
        throw ConfigError("marginal coordinate index out of range");
      p.push_back(r[static_cast<std::size_t>(c)]);
    }
    pts.push_back(std::move(p));
  }
  std::vector<double> w(pts.size(), 1.0);
  canonicalize(&pts, &w);
  Measure m;
  m.kind_ = Kind::Empirical;
  m.dim_ = static_cast<int>(keep_cols.size());
  m.pts_ = std::move(pts);
  m.w_ = std::move(w);
  return m;
}

Measure Measure::empirical_conditional(std::span<const std::vector<double>> rows,
                                       std::span<const int> on_cols,
                                       std::span<const double> value) {
  if (rows.empty()) throw DataError("empirical measure over zero rows");
  if (on_cols.size() != value.size())
    throw ConfigError("conditioning columns and value differ in length");
  const int total = rows.empty() ? 0 : static_cast<int>(rows.front().size());
  std::vector<int> keep;
  for (int c = 0; c < total; ++c)
    if (std::find(on_cols.begin(), on_cols.end(), c) == on_cols.end()) keep.push_back(c);
  if (keep.empty()) throw ConfigError("conditioning consumes every coordinate");

  std::vector<std::vector<double>> pts;
  for (const auto& r : rows) {
    bool match = true;
    for (std::size_t k = 0; k < on_cols.size(); ++k) {
      if (r[static_cast<std::size_t>(on_cols[k])] != value[k]) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    std::vector<double> p;
    p.reserve(keep.size());
    for (int c : keep) p.push_back(r[static_cast<std::size_t>(c)]);
    pts.push_back(std::move(p));
  }
  if (pts.empty()) throw DataError("no rows match the conditioning value");
  std::vector<double> w(pts.size(), 1.0);
  canonicalize(&pts, &w);
  Measure m;
  m.kind_ = Kind::Empirical;
  m.dim_ = static_cast<int>(keep.size());
  m.pts_ = std::move(pts);
  m.w_ = std::move(w);
  return m;
}

bool Measure::is_pointwise() const { return kind_ != Kind::Uniform && kind_ != Kind::Product; }

const std::vector<std::vector<double>>& Measure::points() const {
  if (!is_pointwise()) throw ConfigError("measure has no atom list");
  return pts_;
}

const std::vector<double>& Measure::weights() const {
  if (!is_pointwise()) throw ConfigError("measure has no atom list");
  return w_;
}

double Measure::uniform_lo() const {
  if (kind_ != Kind::Uniform) throw ConfigError("not a uniform measure");
  return a_;
}

double Measure::uniform_hi() const {
  if (kind_ != Kind::Uniform) throw ConfigError("not a uniform measure");
  return b_;
}

double Measure::integrate(const std::function<double(std::span<const double>)>& h) const {
  switch (kind_) {
    case Kind::Dirac:
      return checked(h(pts_.front()));
    case Kind::Discrete:
    case Kind::Empirical:
    case Kind::Interaction: {
      std::vector<double> terms(pts_.size());
      for (std::size_t i = 0; i < pts_.size(); ++i) terms[i] = w_[i] * checked(h(pts_[i]));
      return pairwise_sum(terms);
    }
    case Kind::Uniform: {
      const Quadrature& q = gauss_legendre(kUniformQuadratureNodes);
      const double mid = 0.5 * (a_ + b_);
      const double half = 0.5 * (b_ - a_);
      std::vector<double> terms(q.nodes.size());
      for (std::size_t k = 0; k < q.nodes.size(); ++k) {
        const double x = mid + half * q.nodes[k];
        terms[k] = 0.5 * q.weights[k] * checked(h(std::span<const double>(&x, 1)));
      }
      return pairwise_sum(terms);
    }
    case Kind::Product: {
      std::vector<double> buf(static_cast<std::size_t>(dim_), 0.0);
      // Iterated integral in declaration order; each part integrates the
      // continuation with its block of coordinates filled in.
      std::function<double(std::size_t, std::size_t)> rec =
          [&](std::size_t part, std::size_t off) -> double {
        if (part == parts_.size()) return h(buf);
        const Measure& m = parts_[part];
        const std::size_t w = static_cast<std::size_t>(m.dim());
        return m.integrate([&](std::span<const double> x) {
          std::copy(x.begin(), x.end(), buf.begin() + static_cast<std::ptrdiff_t>(off));
          return rec(part + 1, off + w);
        });
      };
      return rec(0, 0);
    }
  }
  throw ConfigError("bad measure kind");
}

double Measure::integrate1(const std::function<double(double)>& h) const {
  if (dim_ != 1) throw ConfigError("integrate1 needs a univariate measure");
  return integrate([&](std::span<const double> x) { return h(x[0]); });
}

double Measure::mass_in(const SupportSet& set) const {
  if (set.dim() != dim_) throw ConfigError("support set dimension does not match the measure");
  if (is_pointwise()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i)
      if (set.contains(pts_[i])) acc += w_[i];
    return acc;
  }
  if (kind_ == Kind::Uniform) {
    if (set.kind() != SupportSet::Kind::Interval)
      throw ConfigError("uniform mass needs an interval set");
    const double lo = std::max(a_, set.lo());
    const double hi = std::min(b_, set.hi());
    return hi > lo ? (hi - lo) / (b_ - a_) : 0.0;
  }
  // Product
  if (set.kind() != SupportSet::Kind::Product)
    throw ConfigError("product measure mass needs a product set");
  if (set.parts().size() != parts_.size())
    throw ConfigError("product set split does not match the measure parts");
  double acc = 1.0;
  for (std::size_t i = 0; i < parts_.size(); ++i) acc *= parts_[i].mass_in(set.parts()[i]);
  return acc;
}

Measure Measure::normalized(const SupportSet& set) const {
  if (set.dim() != dim_) throw ConfigError("support set dimension does not match the measure");
  Measure out;
  switch (kind_) {
    case Kind::Dirac:
      if (!set.contains(pts_.front()))
        throw NumericError("normalization to a zero-mass set (dirac point outside)");
      out = *this;
      break;
    case Kind::Discrete:
    case Kind::Empirical:
    case Kind::Interaction: {
      std::vector<std::vector<double>> pts;
      std::vector<double> w;
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        if (!set.contains(pts_[i])) continue;
        pts.push_back(pts_[i]);
        w.push_back(w_[i]);
      }
      if (pts.empty()) throw NumericError("normalization to a zero-mass set");
      canonicalize(&pts, &w);
      out = *this;
      out.pts_ = std::move(pts);
      out.w_ = std::move(w);
      break;
    }
    case Kind::Uniform: {
      if (set.kind() != SupportSet::Kind::Interval)
        throw ConfigError("uniform measures normalize to intervals only");
      const double lo = std::max(a_, set.lo());
      const double hi = std::min(b_, set.hi());
      if (!(hi > lo)) throw NumericError("normalization to a zero-mass set (empty overlap)");
      out = uniform(lo, hi);
      break;
    }
    case Kind::Product: {
      if (set.kind() != SupportSet::Kind::Product)
        throw ConfigError("product measures normalize to product sets only");
      if (set.parts().size() != parts_.size())
        throw ConfigError("product set split does not match the measure parts");
      std::vector<Measure> parts;
      parts.reserve(parts_.size());
      for (std::size_t i = 0; i < parts_.size(); ++i)
        parts.push_back(parts_[i].normalized(set.parts()[i]));
      out = product(std::move(parts));
      break;
    }
  }
  out.normalized_to_ = set;
  return out;
}

std::vector<double> Measure::stratified_samples(std::size_t n, std::uint64_t /*seed*/,
                                                std::uint64_t /*stream*/) const {
  if (dim_ != 1) throw ConfigError("stratified sampling needs a univariate measure");
  if (n == 0) throw ConfigError("stratified sampling with zero samples");
  std::vector<double> out;
  out.reserve(n);
  if (kind_ == Kind::Uniform) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      out.push_back(a_ + (b_ - a_) * u);
    }
    return out;
  }
  if (is_pointwise()) {
    // Atoms in ascending order (canonical order is already sorted); inverse
    // CDF at stratum midpoints.
    std::vector<double> cum(w_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      acc += w_[i];
      cum[i] = acc;
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      while (k + 1 < cum.size() && cum[k] < u) ++k;
      out.push_back(pts_[k][0]);
    }
    return out;
  }
  throw ConfigError("stratified sampling is not defined for product measures");
}

Measure interaction_measure(const Measure& m1, const Measure& m2, std::uint64_t seed) {
  if (m1.dim() != 1 || m2.dim() != 1)
    throw ConfigError("interaction measure needs univariate factors");
  Measure out;
  if (m1.is_pointwise() && m2.is_pointwise()) {
    std::vector<std::vector<double>> pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < m1.points().size(); ++i) {
      for (std::size_t j = 0; j < m2.points().size(); ++j) {
        pts.push_back({m1.points()[i][0] * m2.points()[j][0]});
        w.push_back(m1.weights()[i] * m2.weights()[j]);
      }
    }
    out = Measure::discrete(std::move(pts), std::move(w));
  } else {
    const std::size_t n = kInteractionSampleCount;
    std::vector<double> s1 = m1.stratified_samples(n, seed, 1);
    std::vector<double> s2 = m2.stratified_samples(n, seed, 2);
    // Seeded shuffle decouples the two stratifications; without it the
    // quantile pairing would impose perfect rank correlation.
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::uint64_t j = rng::index(seed, 3, i, static_cast<std::uint64_t>(i) + 1);
      std::swap(s2[i], s2[j]);
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back({s1[i] * s2[i]});
    out = Measure::discrete(std::move(pts), std::vector<double>(n, 1.0));
  }
  // Retag so provenance and the sampling seed survive in the result.
  out.kind_ = Measure::Kind::Interaction;
  out.seed_ = seed;
  return out;
}

}  // namespace gmekit
