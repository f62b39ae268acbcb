#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gmekit/ensemble.hpp"

namespace gmekit {

enum class RegionKind { Hdr, EqualTailed };

// Shortest-window HDR assumes a unimodal draw distribution; the multimodal
// variant sweeps a KDE threshold and may return several intervals.
enum class HdrShape { Unimodal, Multimodal };

struct Interval {
  double lo = 0.0, hi = 0.0;
  double width() const { return hi - lo; }
};

struct Region {
  RegionKind kind = RegionKind::Hdr;
  double alpha = kDefaultAlpha;
  std::vector<Interval> intervals;
  double total_width() const;
};

// Both regions contain at least ceil((1-alpha) n) of the samples.
Region hdr_region(std::span<const double> samples, double alpha,
                  HdrShape shape = HdrShape::Unimodal);
Region equal_tailed_region(std::span<const double> samples, double alpha);

struct EstimateOptions {
  double alpha = kDefaultAlpha;
  RegionKind kind = RegionKind::Hdr;
  HdrShape shape = HdrShape::Unimodal;
  bool keep_draws = false;
};

struct QuantityResult {
  std::vector<double> point;                      // ensemble mean per component
  std::vector<Region> regions;                    // one region per component
  std::vector<std::string> labels;                // optional component labels
  std::vector<std::vector<double>> draw_values;   // per component, when kept
};

QuantityResult estimate(const std::function<std::vector<double>(const Theta&)>& quantity,
                        const ThetaEnsemble& ensemble, const EstimateOptions& opt = {});

struct CurveBand {
  std::vector<double> xs;
  std::vector<double> point;
  std::vector<Region> regions;
};

CurveBand curve_band(const std::function<double(const Theta&, double)>& value_at,
                     std::span<const double> xs, const ThetaEnsemble& ensemble,
                     const EstimateOptions& opt = {});

}  // namespace gmekit
