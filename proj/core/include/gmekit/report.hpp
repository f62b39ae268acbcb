#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmekit/measure.hpp"
#include "gmekit/uncertainty.hpp"

namespace gmekit {

struct SeriesPoint {
  double x = 0.0;
  std::string label;  // categorical tick label, empty for metric axes
  double point = 0.0;
  std::vector<Interval> intervals;
};

struct PlotSeries {
  std::string id;
  std::string kind;  // "curve", "points", "bars"
  std::vector<SeriesPoint> points;
  std::map<std::string, std::string> meta;
};

// Window transform onto [0,1]; x outside Q maps to 0 (indicator semantics).
double z_scale(double x, const SupportSet& window);
double z_inverse(double u, const SupportSet& window);

// Quantile window of observed values, default (0.05, 0.95).
SupportSet quantile_window(std::span<const double> values, double q_lo = 0.05, double q_hi = 0.95);

struct StandardizeOptions {
  double sd_y = 1.0;
  std::optional<double> mean_y;          // subtract before scaling when set
  std::optional<SupportSet> window;      // abscissa window for z scaling
  std::pair<double, double> quantiles{0.05, 0.95};  // reported in the sentence
};

QuantityResult standardized_quantity(QuantityResult r, const StandardizeOptions& opt);
PlotSeries standardized_series(PlotSeries s, const StandardizeOptions& opt);

// Reporting sentence naming the scale and window of a standardized quantity.
std::string describe_standardization(const StandardizeOptions& opt);

inline constexpr const char* kPlotSchemaTag = "gmekit-plot/1";

// Emitters are pure: identical inputs give byte-identical output. CSV columns
// are series_id,x,point,lo,hi with the hull of multi-interval regions.
std::string emit_json(std::span<const PlotSeries> series);
std::string emit_csv(std::span<const PlotSeries> series);
std::string emit_svg(std::span<const PlotSeries> series);

}  // namespace gmekit
