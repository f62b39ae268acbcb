#include "gmekit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "gmekit/errors.hpp"
#include "json.hpp"

namespace gmekit {

namespace {

// Shortest round-trip decimal form; the emitters promise byte-identical
// output for identical inputs, so formatting must not depend on locale or
// stream state.
std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("number formatting failed");
  return std::string(buf, p);
}

const SupportSet& require_window(const SupportSet& w) {
  if (w.kind() != SupportSet::Kind::Interval || w.dim() != 1)
    throw ConfigError("the z transform needs a one-dimensional interval window");
  return w;
}

}  // namespace

double z_scale(double x, const SupportSet& window) {
  require_window(window);
  if (!window.contains1(x)) return 0.0;
  return (x - window.lo()) / (window.hi() - window.lo());
}

double z_inverse(double u, const SupportSet& window) {
  require_window(window);
  if (!(u >= 0.0 && u <= 1.0)) throw ConfigError("z values live in [0,1]");
  return window.lo() + u * (window.hi() - window.lo());
}

SupportSet quantile_window(std::span<const double> values, double q_lo, double q_hi) {
  if (values.empty()) throw DataError("quantile window needs values");
  if (!(q_lo >= 0.0 && q_lo < q_hi && q_hi <= 1.0))
    throw ConfigError("quantile window needs 0 <= q_lo < q_hi <= 1");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - std::floor(pos);
    return i + 1 < s.size() ? s[i] * (1.0 - frac) + s[i + 1] * frac : s[i];
  };
  const double a = at(q_lo);
  const double b = at(q_hi);
  if (!(a < b)) throw DataError("quantile window is degenerate; the values barely vary");
  return SupportSet::interval(a, b);
}

namespace {

double scale_y(double y, const StandardizeOptions& opt) {
  if (!(opt.sd_y > 0.0)) throw ConfigError("standardization needs sd_y > 0");
  return (y - opt.mean_y.value_or(0.0)) / opt.sd_y;
}

}  // namespace

QuantityResult standardized_quantity(QuantityResult r, const StandardizeOptions& opt) {
  for (double& p : r.point) p = scale_y(p, opt);
  for (Region& reg : r.regions)
    for (Interval& iv : reg.intervals) {
      iv.lo = scale_y(iv.lo, opt);
      iv.hi = scale_y(iv.hi, opt);
    }
  for (auto& draws : r.draw_values)
    for (double& d : draws) d = scale_y(d, opt);
  return r;
}

PlotSeries standardized_series(PlotSeries s, const StandardizeOptions& opt) {
  std::vector<SeriesPoint> kept;
  kept.reserve(s.points.size());
  for (SeriesPoint p : s.points) {
    if (opt.window) {
      // Points outside the window have no z image and are dropped rather than
      // piled onto zero.
      if (!require_window(*opt.window).contains1(p.x)) continue;
      p.x = z_scale(p.x, *opt.window);
    }
    p.point = scale_y(p.point, opt);
    for (Interval& iv : p.intervals) {
      iv.lo = scale_y(iv.lo, opt);
      iv.hi = scale_y(iv.hi, opt);
    }
    kept.push_back(std::move(p));
  }
  s.points = std::move(kept);
  if (opt.window) s.meta["abscissa"] = "z";
  s.meta["ordinate"] = "sd_y";
  return s;
}

std::string describe_standardization(const StandardizeOptions& opt) {
  std::string out =
      "Effects are reported per standard deviation of the outcome (sd_y = " + fmt(opt.sd_y) + ")";
  if (opt.mean_y) out += ", centered at " + fmt(*opt.mean_y);
  out += ".";
  if (opt.window) {
    require_window(*opt.window);
    out += " The regressor axis is rescaled to [0,1] over [" + fmt(opt.window->lo()) + ", " +
           fmt(opt.window->hi()) + "], its (" + fmt(opt.quantiles.first) + ", " +
           fmt(opt.quantiles.second) + ") quantile window; values outside the window map to 0.";
  }
  return out;
}

namespace {

std::pair<double, double> hull(const std::vector<Interval>& ivs) {
  double lo = ivs.front().lo, hi = ivs.front().hi;
  for (const Interval& iv : ivs) {
    lo = std::min(lo, iv.lo);
    hi = std::max(hi, iv.hi);
  }
  return {lo, hi};
}

}  // namespace

std::string emit_json(std::span<const PlotSeries> series) {
  nlohmann::json root;
  root["schema"] = kPlotSchemaTag;
  auto& arr = root["series"] = nlohmann::json::array();
  for (const PlotSeries& s : series) {
    nlohmann::json js;
    js["id"] = s.id;
    js["kind"] = s.kind;
    js["meta"] = s.meta;
    auto& pts = js["points"] = nlohmann::json::array();
    for (const SeriesPoint& p : s.points) {
      nlohmann::json jp;
      jp["x"] = p.x;
      if (!p.label.empty()) jp["label"] = p.label;
      jp["point"] = p.point;
      auto& ivs = jp["intervals"] = nlohmann::json::array();
      for (const Interval& iv : p.intervals) ivs.push_back({iv.lo, iv.hi});
      pts.push_back(std::move(jp));
    }
    arr.push_back(std::move(js));
  }
  return root.dump(2) + "\n";
}

std::string emit_csv(std::span<const PlotSeries> series) {
  std::string out = "series_id,x,point,lo,hi\n";
  for (const PlotSeries& s : series)
    for (const SeriesPoint& p : s.points) {
      out += s.id + "," + fmt(p.x) + "," + fmt(p.point);
      if (p.intervals.empty()) {
        out += ",,";
      } else {
        const auto [lo, hi] = hull(p.intervals);
        out += "," + fmt(lo) + "," + fmt(hi);
      }
      out += "\n";
    }
  return out;
}

namespace {

constexpr double kW = 640.0, kH = 400.0;
constexpr double kMargin = 48.0;

}  // namespace

std::string emit_svg(std::span<const PlotSeries> series) {
  // Data ranges over every drawn coordinate; empty input still renders axes.
  bool any = false;
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  for (const PlotSeries& s : series)
    for (const SeriesPoint& p : s.points) {
      auto grow = [&](double x, double y) {
        if (!any) {
          xlo = xhi = x;
          ylo = yhi = y;
          any = true;
        } else {
          xlo = std::min(xlo, x);
          xhi = std::max(xhi, x);
          ylo = std::min(ylo, y);
          yhi = std::max(yhi, y);
        }
      };
      grow(p.x, p.point);
      for (const Interval& iv : p.intervals) {
        grow(p.x, iv.lo);
        grow(p.x, iv.hi);
      }
      if (s.kind == "bars") grow(p.x, 0.0);
    }
  if (xlo == xhi) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  if (ylo == yhi) {
    ylo -= 0.5;
    yhi += 0.5;
  }

  auto px = [&](double x) { return kMargin + (x - xlo) / (xhi - xlo) * (kW - 2 * kMargin); };
  auto py = [&](double y) { return kH - kMargin - (y - ylo) / (yhi - ylo) * (kH - 2 * kMargin); };
  const char* palette[] = {"#2266aa", "#aa4422", "#228844", "#886622", "#662288", "#116677"};
  const std::size_t n_colors = sizeof(palette) / sizeof(palette[0]);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" +
         fmt(kH) + "\" viewBox=\"0 0 " + fmt(kW) + " " + fmt(kH) + "\">\n";
  svg += "<rect width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) + "\" fill=\"white\"/>\n";

  // Axes with four ticks each.
  svg += "<g stroke=\"#333333\" fill=\"none\"><path d=\"M" + fmt(kMargin) + " " + fmt(kMargin) +
         " V" + fmt(kH - kMargin) + " H" + fmt(kW - kMargin) + "\"/></g>\n";
  svg += "<g font-family=\"monospace\" font-size=\"11\" fill=\"#333333\">\n";
  for (int t = 0; t <= 3; ++t) {
    const double fx = xlo + (xhi - xlo) * t / 3.0;
    const double fy = ylo + (yhi - ylo) * t / 3.0;
    svg += "<text x=\"" + fmt(px(fx)) + "\" y=\"" + fmt(kH - kMargin + 16.0) +
           "\" text-anchor=\"middle\">" + fmt(fx) + "</text>\n";
    svg += "<text x=\"" + fmt(kMargin - 6.0) + "\" y=\"" + fmt(py(fy) + 4.0) +
           "\" text-anchor=\"end\">" + fmt(fy) + "</text>\n";
  }
  svg += "</g>\n";

  std::size_t si = 0;
  for (const PlotSeries& s : series) {
    const char* color = palette[si % n_colors];
    ++si;
    if (s.kind == "curve") {
      // Band first so the line draws on top.
      bool has_band = !s.points.empty();
      for (const SeriesPoint& p : s.points) has_band = has_band && !p.intervals.empty();
      if (has_band) {
        std::string d;
        for (std::size_t i = 0; i < s.points.size(); ++i) {
          const auto [lo, hi] = hull(s.points[i].intervals);
          (void)lo;
          d += (i == 0 ? "M" : "L") + fmt(px(s.points[i].x)) + " " + fmt(py(hi));
        }
        for (std::size_t i = s.points.size(); i-- > 0;) {
          const auto [lo, hi] = hull(s.points[i].intervals);
          (void)hi;
          d += "L" + fmt(px(s.points[i].x)) + " " + fmt(py(lo));
        }
        d += "Z";
        svg += "<path d=\"" + d + "\" fill=\"" + std::string(color) +
               "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
      }
      std::string d;
      for (std::size_t i = 0; i < s.points.size(); ++i)
        d += (i == 0 ? "M" : "L") + fmt(px(s.points[i].x)) + " " + fmt(py(s.points[i].point));
      svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\"/>\n";
    } else if (s.kind == "bars") {
      const double bw = s.points.size() > 1
                            ? 0.6 * (kW - 2 * kMargin) / static_cast<double>(s.points.size())
                            : 40.0;
      for (const SeriesPoint& p : s.points) {
        const double y0 = py(0.0), y1 = py(p.point);
        svg += "<rect x=\"" + fmt(px(p.x) - bw / 2) + "\" y=\"" + fmt(std::min(y0, y1)) +
               "\" width=\"" + fmt(bw) + "\" height=\"" + fmt(std::abs(y0 - y1)) + "\" fill=\"" +
               std::string(color) + "\" fill-opacity=\"0.75\"/>\n";
        for (const Interval& iv : p.intervals)
          svg += "<line x1=\"" + fmt(px(p.x)) + "\" x2=\"" + fmt(px(p.x)) + "\" y1=\"" +
                 fmt(py(iv.lo)) + "\" y2=\"" + fmt(py(iv.hi)) + "\" stroke=\"#222222\"/>\n";
        if (!p.label.empty())
          svg += "<text x=\"" + fmt(px(p.x)) + "\" y=\"" + fmt(kH - kMargin + 30.0) +
                 "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">" +
                 p.label + "</text>\n";
      }
    } else {
      for (const SeriesPoint& p : s.points) {
        for (const Interval& iv : p.intervals)
          svg += "<line x1=\"" + fmt(px(p.x)) + "\" x2=\"" + fmt(px(p.x)) + "\" y1=\"" +
                 fmt(py(iv.lo)) + "\" y2=\"" + fmt(py(iv.hi)) + "\" stroke=\"" +
                 std::string(color) + "\"/>\n";
        svg += "<circle cx=\"" + fmt(px(p.x)) + "\" cy=\"" + fmt(py(p.point)) +
               "\" r=\"3\" fill=\"" + std::string(color) + "\"/>\n";
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace gmekit
