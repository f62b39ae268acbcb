#include "gmekit/runner.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmekit/compat.hpp"
#include "gmekit/dataset.hpp"
#include "gmekit/ensemble.hpp"
#include "gmekit/errors.hpp"
#include "gmekit/fit.hpp"
#include "gmekit/json_io.hpp"
#include "gmekit/predictive.hpp"
#include "gmekit/quantity.hpp"
#include "gmekit/report.hpp"
#include "gmekit/synthetic.hpp"
#include "gmekit/uncertainty.hpp"
#include "gmekit/util.hpp"
#include "json.hpp"

namespace gmekit {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path resolve(const std::string& rel, const std::string& base_dir) {
  fs::path p(rel);
  return p.is_absolute() ? p : fs::path(base_dir) / p;
}

std::vector<double> grid_from_json(const json& j) {
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& e : j) out.push_back(e.get<double>());
    if (out.empty()) throw ConfigError("empty grid");
    return out;
  }
  if (j.is_object() && j.contains("from") && j.contains("to") && j.contains("count"))
    return linspace(j["from"].get<double>(), j["to"].get<double>(),
                    j["count"].get<std::size_t>());
  throw ConfigError("grid must be an array or {from, to, count}");
}

void check_id(const std::string& id) {
  if (id.empty()) throw ConfigError("request without an id");
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      throw ConfigError("request id '" + id + "' must be alphanumeric with - or _");
}

struct RunContext {
  RegressorSchema schema;
  EncodedData data;
  ParametricModel model;
  Theta theta;
  QuantityEngine engine;
  ThetaEnsemble ensemble;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
};

EstimateOptions estimate_options(const json& req, double alpha) {
  EstimateOptions opt;
  opt.alpha = alpha;
  const std::string region = req.value("region", std::string("hdr"));
  if (region == "hdr")
    opt.kind = RegionKind::Hdr;
  else if (region == "equal-tailed")
    opt.kind = RegionKind::EqualTailed;
  else
    throw ConfigError("region must be 'hdr' or 'equal-tailed'");
  const std::string shape = req.value("shape", std::string("unimodal"));
  if (shape == "unimodal")
    opt.shape = HdrShape::Unimodal;
  else if (shape == "multimodal")
    opt.shape = HdrShape::Multimodal;
  else
    throw ConfigError("shape must be 'unimodal' or 'multimodal'");
  return opt;
}

std::optional<StandardizeOptions> standardize_options(const json& req, const RunContext& ctx) {
  if (!req.contains("standardize")) return std::nullopt;
  const json& js = req["standardize"];
  StandardizeOptions opt;
  if (js.contains("sd_y")) {
    if (js["sd_y"].is_string() && js["sd_y"] == "auto") {
      if (ctx.data.y.empty()) throw ConfigError("standardize sd_y=auto needs an outcome column");
      opt.sd_y = sample_sd(ctx.data.y);
    } else {
      opt.sd_y = js["sd_y"].get<double>();
    }
  }
  if (js.contains("mean_y")) {
    if (js["mean_y"].is_string() && js["mean_y"] == "auto") {
      if (ctx.data.y.empty())
        throw ConfigError("standardize mean_y=auto needs an outcome column");
      opt.mean_y = pairwise_mean(ctx.data.y);
    } else {
      opt.mean_y = js["mean_y"].get<double>();
    }
  }
  if (js.contains("window")) {
    if (js["window"].is_object() && js["window"].contains("quantiles")) {
      const auto q = js["window"]["quantiles"];
      opt.quantiles = {q[0].get<double>(), q[1].get<double>()};
      const InterestLayout& lay = ctx.engine.layout(InteractionPolicy::Combined);
      if (lay.metric_col < 0)
        throw ConfigError("quantile windows need a metric interest column");
      std::vector<double> vals;
      for (const auto& r : ctx.data.x) vals.push_back(r[static_cast<std::size_t>(lay.metric_col)]);
      opt.window = quantile_window(vals, opt.quantiles.first, opt.quantiles.second);
    } else {
      opt.window = parse_support_set_json(js["window"].dump());
    }
  }
  return opt;
}

std::vector<std::string> output_kinds(const json& req) {
  std::vector<std::string> out;
  for (const auto& o : req.value("outputs", json::array({"json"}))) {
    const std::string s = o.get<std::string>();
    if (s != "json" && s != "csv" && s != "svg")
      throw ConfigError("outputs must be json, csv or svg");
    out.push_back(s);
  }
  return out;
}

PlotSeries series_from_result(const std::string& id, const QuantityResult& r) {
  PlotSeries s;
  s.id = id;
  s.kind = "bars";
  for (std::size_t l = 0; l < r.point.size(); ++l) {
    SeriesPoint p;
    p.x = static_cast<double>(l);
    if (l < r.labels.size()) p.label = r.labels[l];
    p.point = r.point[l];
    if (l < r.regions.size()) p.intervals = r.regions[l].intervals;
    s.points.push_back(std::move(p));
  }
  return s;
}

PlotSeries series_from_band(const std::string& id, const CurveBand& band) {
  PlotSeries s;
  s.id = id;
  s.kind = "curve";
  for (std::size_t i = 0; i < band.xs.size(); ++i) {
    SeriesPoint p;
    p.x = band.xs[i];
    p.point = band.point[i];
    p.intervals = band.regions[i].intervals;
    s.points.push_back(std::move(p));
  }
  return s;
}

void emit_plot(RunProducts& out, const std::string& id, const PlotSeries& series,
               const std::vector<std::string>& kinds) {
  const PlotSeries arr[] = {series};
  for (const std::string& k : kinds) {
    if (k == "json") out.files.push_back({id + ".json", emit_json(arr)});
    if (k == "csv") out.files.push_back({id + ".csv", emit_csv(arr)});
    if (k == "svg") out.files.push_back({id + ".svg", emit_svg(arr)});
  }
}

// Scalar-result requests: evaluate per draw when an ensemble is available,
// otherwise report the plain point.
void emit_scalar(RunProducts& out, RunContext& ctx, const json& req, const std::string& id,
                 const std::string& target,
                 const std::function<std::vector<double>(const Theta&)>& qfun,
                 std::vector<std::string> labels) {
  QuantityResult result;
  std::size_t n_draws = 0;
  // Validate the region options even when a single-point ensemble never uses
  // them; a typo must not silently change the meaning of a later run.
  const EstimateOptions eopt = estimate_options(req, ctx.alpha);
  if (ctx.ensemble.draws.size() > 1) {
    result = estimate(qfun, ctx.ensemble, eopt);
    n_draws = ctx.ensemble.draws.size();
  } else {
    result.point = qfun(ctx.theta);
  }
  result.labels = std::move(labels);

  ResultMeta meta;
  meta.id = id;
  meta.target = target;
  meta.seed = ctx.seed;
  meta.n_draws = n_draws;
  if (const auto st = standardize_options(req, ctx)) {
    result = standardized_quantity(std::move(result), *st);
    meta.note = describe_standardization(*st);
  }

  const auto kinds = output_kinds(req);
  for (const std::string& k : kinds)
    if (k == "json") out.files.push_back({id + ".json", result_to_json(result, meta)});
  std::vector<std::string> plot_kinds;
  for (const std::string& k : kinds)
    if (k != "json") plot_kinds.push_back(k);
  if (!plot_kinds.empty()) emit_plot(out, id, series_from_result(id, result), plot_kinds);

  out.log += id + ": " + target + " ok, " + std::to_string(result.point.size()) +
             " component(s)\n";
}

void run_request(RunProducts& out, RunContext& ctx, const json& req) {
  const std::string id = req.value("id", std::string());
  check_id(id);
  const std::string target = req.value("target", std::string());
  QuantitySpec spec;
  if (req.contains("spec")) spec = parse_quantity_spec_json(req["spec"].dump(), ctx.data);

  if (target == "gme") {
    emit_scalar(out, ctx, req, id, target,
                [&](const Theta& t) { return ctx.engine.gme(t, spec); },
                ctx.engine.gme_labels(spec));
    return;
  }
  if (target == "averaged-expectation") {
    if (!req.contains("at")) throw ConfigError(id + ": averaged-expectation needs 'at'");
    std::vector<double> at;
    for (const auto& e : req["at"]) at.push_back(e.get<double>());
    emit_scalar(out, ctx, req, id, target,
                [&, at](const Theta& t) {
                  return std::vector<double>{ctx.engine.averaged_expectation(t, at, spec)};
                },
                {"E[g]"});
    return;
  }
  if (target == "individualized-expectation") {
    emit_scalar(out, ctx, req, id, target,
                [&](const Theta& t) {
                  return std::vector<double>{ctx.engine.individualized_expectation(t, spec)};
                },
                {"e"});
    return;
  }
  if (target == "expectation-curve" || target == "slope-curve") {
    if (!req.contains("grid")) throw ConfigError(id + ": curve targets need 'grid'");
    const std::vector<double> grid = grid_from_json(req["grid"]);
    const bool slope = target == "slope-curve";
    auto value_at = [&](const Theta& t, double x) {
      const std::span<const double> xs(&x, 1);
      return slope ? ctx.engine.slope_of_expectation(t, xs, spec)
                   : ctx.engine.averaged_expectation(t, xs, spec);
    };
    const ThetaEnsemble& ens = ctx.ensemble;
    CurveBand band = curve_band(value_at, grid, ens, estimate_options(req, ctx.alpha));
    PlotSeries series = series_from_band(id, band);
    series.meta["target"] = target;
    if (const auto st = standardize_options(req, ctx)) {
      series = standardized_series(std::move(series), *st);
      series.meta["standardization"] = describe_standardization(*st);
    }
    emit_plot(out, id, series, output_kinds(req));
    out.log += id + ": " + target + " ok, " + std::to_string(series.points.size()) +
               " grid point(s)\n";
    return;
  }
  if (target == "predictive") {
    if (!req.contains("grid")) throw ConfigError(id + ": predictive needs a 'grid' of outcomes");
    const std::vector<double> grid = grid_from_json(req["grid"]);
    std::vector<double> at;
    if (req.contains("at"))
      for (const auto& e : req["at"]) at.push_back(e.get<double>());
    PredictiveFamily fam;
    fam.family = ctx.model.family();
    fam.trials = req.value("trials", 1.0);
    auto e_of = [&, at](const Theta& t) {
      return at.empty() ? ctx.engine.individualized_expectation(t, spec)
                        : ctx.engine.averaged_expectation(t, at, spec);
    };
    const PredictiveCurve curve = marginal_predictive_curve(
        grid, ctx.ensemble, e_of, fam, estimate_options(req, ctx.alpha));
    PlotSeries series;
    series.id = id;
    series.kind = ctx.model.family() == Family::GaussianIdentity ? "curve" : "points";
    series.meta["target"] = "predictive";
    for (std::size_t i = 0; i < curve.y.size(); ++i) {
      SeriesPoint p;
      p.x = curve.y[i];
      p.point = curve.point[i];
      p.intervals = curve.regions[i].intervals;
      series.points.push_back(std::move(p));
    }
    emit_plot(out, id, series, output_kinds(req));
    out.log += id + ": predictive ok, " + std::to_string(curve.y.size()) + " grid point(s)\n";
    return;
  }
  if (target == "classic") {
    const std::string kind_s = req.value("kind", std::string());
    compat::ClassicKind kind;
    if (kind_s == "AAP") kind = compat::ClassicKind::AAP;
    else if (kind_s == "AME") kind = compat::ClassicKind::AME;
    else if (kind_s == "APR") kind = compat::ClassicKind::APR;
    else if (kind_s == "MER") kind = compat::ClassicKind::MER;
    else if (kind_s == "APM") kind = compat::ClassicKind::APM;
    else if (kind_s == "MEM") kind = compat::ClassicKind::MEM;
    else throw ConfigError(id + ": classic kind must be AAP, AME, APR, MER, APM or MEM");
    compat::ClassicOptions opt;
    if (req.contains("x_rep"))
      for (const auto& e : req["x_rep"]) opt.x_rep.push_back(e.get<double>());
    if (req.value("mean_policy", std::string("proportions")) == "strict")
      opt.mean_policy = compat::CategoricalMeanPolicy::Strict;
    opt.offset = spec.offset;
    emit_scalar(out, ctx, req, id, "classic/" + kind_s,
                [&, opt, kind](const Theta& t) {
                  return compat::classic(ctx.engine, t, kind, opt);
                },
                {});
    return;
  }
  if (target == "fame") {
    std::optional<double> h;
    if (req.contains("h")) h = req["h"].get<double>();
    emit_scalar(out, ctx, req, id, target,
                [&, h](const Theta& t) {
                  return std::vector<double>{compat::fame(ctx.engine, t, h)};
                },
                {"fAME"});
    return;
  }
  if (target == "kaufman") {
    if (!req.contains("x_ref")) throw ConfigError(id + ": kaufman needs 'x_ref'");
    std::vector<double> x_ref;
    for (const auto& e : req["x_ref"]) x_ref.push_back(e.get<double>());
    emit_scalar(out, ctx, req, id, target,
                [&, x_ref](const Theta& t) {
                  const compat::KaufmanResult k = compat::kaufman(ctx.engine, t, x_ref);
                  return std::vector<double>{k.partial, k.delta_p};
                },
                {"partial", "delta_p"});
    return;
  }
  if (target == "predictive-comparison") {
    if (!req.contains("lo") || !req.contains("hi"))
      throw ConfigError(id + ": predictive-comparison needs 'lo' and 'hi'");
    const double lo = req["lo"].get<double>();
    const double hi = req["hi"].get<double>();
    emit_scalar(out, ctx, req, id, target,
                [&, lo, hi](const Theta& t) {
                  return std::vector<double>{
                      compat::predictive_comparison(ctx.engine, t, lo, hi)};
                },
                {"APC"});
    return;
  }
  if (target == "ale") {
    if (!req.contains("grid")) throw ConfigError(id + ": ale needs 'grid'");
    const std::vector<double> grid = grid_from_json(req["grid"]);
    emit_scalar(out, ctx, req, id, target,
                [&, grid](const Theta& t) {
                  std::vector<double> vals;
                  for (const compat::AlePoint& p : compat::ale_curve(ctx.engine, t, grid))
                    vals.push_back(p.value);
                  return vals;
                },
                {});
    return;
  }
  throw ConfigError(id + ": unknown target '" + target + "'");
}

}  // namespace

RunProducts run_config_text(const std::string& config_json, const std::string& base_dir,
                            const RunOverrides& overrides) {
  json cfg = json::parse(config_json, nullptr, false);
  if (cfg.is_discarded()) throw ConfigError("run config: malformed JSON");

  // Data.
  Dataset raw;
  if (cfg.contains("data")) {
    const json& jd = cfg["data"];
    if (jd.is_string()) {
      raw = read_csv_file(resolve(jd.get<std::string>(), base_dir).string());
    } else if (jd.is_object() && jd.contains("synthetic")) {
      const std::string which = jd["synthetic"].get<std::string>();
      const auto n = jd.value("n", std::size_t{2000});
      const auto dseed = jd.value("seed", std::uint64_t{1});
      if (which == "inpatient")
        raw = make_inpatient_synthetic(n, dseed);
      else if (which == "redcard")
        raw = make_redcard_synthetic(n, dseed);
      else
        throw ConfigError("unknown synthetic dataset '" + which + "'");
    } else {
      throw ConfigError("data must be a CSV path or {\"synthetic\": ...}");
    }
  }

  // Schema.
  if (!cfg.contains("schema")) throw ConfigError("run config: 'schema' is required");
  const std::string schema_text = cfg["schema"].is_string()
                                      ? read_file(resolve(cfg["schema"].get<std::string>(), base_dir))
                                      : cfg["schema"].dump();
  RegressorSchema schema = RegressorSchema::compile(parse_schema_json(schema_text));

  OffsetSpec offset;
  if (cfg.contains("offset")) {
    offset.column = cfg["offset"].value("column", std::string());
    offset.log = cfg["offset"].value("log", false);
  }
  EncodedData data;
  if (!raw.names.empty())
    data = encode_dataset(raw, schema, cfg.value("outcome", std::string()), offset,
                          cfg.value("trials", std::string()));

  // Model: pre-specified bundle or an in-run fit.
  std::string log;
  ModelBundle bundle = [&]() -> ModelBundle {
    if (cfg.contains("model")) {
      const std::string text = cfg["model"].is_string()
                                   ? read_file(resolve(cfg["model"].get<std::string>(), base_dir))
                                   : cfg["model"].dump();
      return parse_model_json(text, schema);
    }
    if (cfg.contains("fit")) {
      const Family family = family_from_string(cfg["fit"].value("family", std::string()));
      ParametricModel model = default_terms_model(schema, family);
      FitOptions fopt;
      fopt.max_iter = cfg["fit"].value("max_iter", fopt.max_iter);
      const FitResult fr = fit_model(model, data, fopt);
      log += "fit: " + family_to_string(family) + " deviance=" + std::to_string(fr.deviance) +
             " iterations=" + std::to_string(fr.iterations) + "\n";
      return ModelBundle{std::move(model), fr.theta, fr.cov, {}};
    }
    throw ConfigError("run config needs 'model' or 'fit'");
  }();

  RunContext ctx{schema,
                 data,
                 bundle.model,
                 bundle.theta,
                 QuantityEngine(bundle.model, schema, data),
                 ThetaEnsemble{},
                 overrides.seed.value_or(cfg.value("seed", std::uint64_t{20240801})),
                 overrides.alpha.value_or(cfg.value("alpha", kDefaultAlpha))};

  const std::size_t n_draws =
      overrides.n_draws.value_or(cfg.value("n_draws", kDefaultDrawCount));
  if (!bundle.draws_file.empty()) {
    ctx.ensemble = read_draws_csv(resolve(bundle.draws_file, base_dir).string(),
                                  ctx.model.beta_len(), ctx.model.v_len());
  } else if (!bundle.cov.empty()) {
    ctx.ensemble = make_ensemble_normal(ctx.theta, bundle.cov, n_draws, ctx.seed);
  } else {
    ctx.ensemble = ensemble_from_draws({ctx.theta}, "point");
  }

  RunProducts out;
  out.log = std::move(log);
  if (!cfg.contains("requests") || !cfg["requests"].is_array() || cfg["requests"].empty())
    throw ConfigError("run config needs a non-empty 'requests' array");
  std::vector<std::string> seen;
  for (const auto& req : cfg["requests"]) {
    const std::string id = req.value("id", std::string());
    for (const std::string& s : seen)
      if (s == id) throw ConfigError("duplicate request id '" + id + "'");
    seen.push_back(id);
    run_request(out, ctx, req);
  }
  return out;
}

RunProducts run_config_file(const std::string& config_path, const std::string& out_dir,
                            const RunOverrides& overrides) {
  const fs::path cfg(config_path);
  RunProducts out = run_config_text(read_file(cfg), cfg.parent_path().string(), overrides);
  fs::create_directories(out_dir);
  for (const RunProduct& f : out.files) {
    std::ofstream os(fs::path(out_dir) / f.filename, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + f.filename + "' under '" + out_dir + "'");
    os << f.content;
  }
  return out;
}

}  // namespace gmekit
