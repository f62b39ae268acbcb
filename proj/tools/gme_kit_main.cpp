// gme-kit: command-line front end for measure-weighted effect summaries.
// Exit codes: 0 ok, 2 configuration error, 3 numeric failure, 4 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmekit/dataset.hpp"
#include "gmekit/errors.hpp"
#include "gmekit/fit.hpp"
#include "gmekit/json_io.hpp"
#include "gmekit/report.hpp"
#include "gmekit/runner.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gmekit::ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw gmekit::ConfigError("'" + tok + "' is not a number");
    }
  }
  return out;
}

void deliver(const gmekit::RunProducts& products, const std::string& out_dir) {
  if (out_dir.empty()) {
    std::cerr << products.log;
    bool first = true;
    for (const auto& f : products.files) {
      if (products.files.size() > 1) {
        if (!first) std::cout << "\n";
        std::cout << "-- " << f.filename << " --\n";
      }
      std::cout << f.content;
      first = false;
    }
    return;
  }
  fs::create_directories(out_dir);
  for (const auto& f : products.files) {
    std::ofstream os(fs::path(out_dir) / f.filename, std::ios::binary);
    if (!os) throw gmekit::ConfigError("cannot write '" + f.filename + "'");
    os << f.content;
  }
  std::cout << products.log;
}

// Flags shared by every subcommand that evaluates quantities.
struct Context {
  std::string data, schema, model, fit_family;
  std::string outcome, offset_col, trials;
  bool log_offset = false;
  std::string spec_file, assumption, policy;
  double spec_offset = 0.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> draws;
  std::optional<double> alpha;
  std::string region = "hdr", shape = "unimodal";
  std::vector<std::string> formats{"json"};
  std::string out_dir;
};

void add_context_flags(CLI::App* cmd, Context& c) {
  cmd->add_option("--data", c.data, "CSV data file");
  cmd->add_option("--schema", c.schema, "regressor schema JSON file")->required();
  cmd->add_option("--model", c.model, "model bundle JSON file");
  cmd->add_option("--fit", c.fit_family,
                  "fit in place with this family (gaussian-identity, binomial-logit, "
                  "poisson-log) instead of --model");
  cmd->add_option("--outcome", c.outcome, "outcome column");
  cmd->add_option("--offset-col", c.offset_col, "offset column");
  cmd->add_flag("--log-offset", c.log_offset, "apply log() to the offset column");
  cmd->add_option("--trials", c.trials, "binomial trials column");
  cmd->add_option("--spec", c.spec_file, "quantity spec JSON file");
  cmd->add_option("--assumption", c.assumption, "A.I, A.II' or A.II''");
  cmd->add_option("--policy", c.policy, "combined or separated");
  cmd->add_option("--offset", c.spec_offset, "offset value used in quantity evaluation");
  cmd->add_option("--seed", c.seed, "ensemble seed");
  cmd->add_option("--draws", c.draws, "ensemble draw count");
  cmd->add_option("--alpha", c.alpha, "region level (default 0.05)");
  cmd->add_option("--region", c.region, "hdr or equal-tailed");
  cmd->add_option("--shape", c.shape, "unimodal or multimodal (hdr only)");
  cmd->add_option("--format", c.formats, "outputs: json, csv, svg")->delimiter(',');
  cmd->add_option("-o,--out", c.out_dir, "output directory (default: stdout)");
}

json spec_from_context(const Context& c) {
  json spec = c.spec_file.empty() ? json::object() : json::parse(read_file(c.spec_file));
  if (!c.assumption.empty()) spec["assumption"] = c.assumption;
  if (!c.policy.empty()) spec["policy"] = c.policy;
  if (c.spec_offset != 0.0) spec["offset"] = c.spec_offset;
  return spec;
}

json config_from_context(const Context& c) {
  json cfg;
  if (!c.data.empty()) cfg["data"] = c.data;
  cfg["schema"] = c.schema;
  if (!c.model.empty() && !c.fit_family.empty())
    throw gmekit::ConfigError("--model and --fit are mutually exclusive");
  if (!c.model.empty())
    cfg["model"] = c.model;
  else if (!c.fit_family.empty())
    cfg["fit"] = json{{"family", c.fit_family}};
  else
    throw gmekit::ConfigError("one of --model or --fit is required");
  if (!c.outcome.empty()) cfg["outcome"] = c.outcome;
  if (!c.offset_col.empty()) cfg["offset"] = json{{"column", c.offset_col}, {"log", c.log_offset}};
  if (!c.trials.empty()) cfg["trials"] = c.trials;
  if (c.seed) cfg["seed"] = *c.seed;
  if (c.draws) cfg["n_draws"] = *c.draws;
  if (c.alpha) cfg["alpha"] = *c.alpha;
  return cfg;
}

void run_single_request(const Context& c, json request) {
  json cfg = config_from_context(c);
  request["region"] = c.region;
  request["shape"] = c.shape;
  request["outputs"] = c.formats;
  if (!request.contains("spec")) request["spec"] = spec_from_context(c);
  cfg["requests"] = json::array({std::move(request)});
  deliver(gmekit::run_config_text(cfg.dump(), fs::current_path().string(), {}), c.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure-weighted effect summaries for parametric regression models"};
  app.require_subcommand(1);
  std::function<void()> action;

  // run
  {
    auto* cmd = app.add_subcommand("run", "execute a run config file");
    auto config = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    auto ov = std::make_shared<gmekit::RunOverrides>();
    cmd->add_option("config", *config, "run config JSON")->required();
    cmd->add_option("-o,--out", *out_dir, "output directory (default: stdout)");
    cmd->add_option("--seed", ov->seed, "override the ensemble seed");
    cmd->add_option("--draws", ov->n_draws, "override the ensemble draw count");
    cmd->add_option("--alpha", ov->alpha, "override the region level");
    cmd->callback([&action, config, out_dir, ov] {
      action = [config, out_dir, ov] {
        if (out_dir->empty()) {
          const fs::path p(*config);
          deliver(gmekit::run_config_text(read_file(*config), p.parent_path().string(), *ov), "");
        } else {
          std::cout << gmekit::run_config_file(*config, *out_dir, *ov).log;
        }
      };
    });
  }

  // fit
  {
    auto* cmd = app.add_subcommand("fit", "fit a model and write its bundle JSON");
    struct FitArgs {
      std::string data, schema, family, outcome, offset_col, trials, out;
      bool log_offset = false;
    };
    auto a = std::make_shared<FitArgs>();
    cmd->add_option("--data", a->data, "CSV data file")->required();
    cmd->add_option("--schema", a->schema, "regressor schema JSON file")->required();
    cmd->add_option("--family", a->family, "gaussian-identity, binomial-logit or poisson-log")
        ->required();
    cmd->add_option("--outcome", a->outcome, "outcome column")->required();
    cmd->add_option("--offset-col", a->offset_col, "offset column");
    cmd->add_flag("--log-offset", a->log_offset, "apply log() to the offset column");
    cmd->add_option("--trials", a->trials, "binomial trials column");
    cmd->add_option("-o,--out", a->out, "output file (default: stdout)");
    cmd->callback([&action, a] {
      action = [a] {
        const gmekit::Dataset raw = gmekit::read_csv_file(a->data);
        const gmekit::RegressorSchema schema =
            gmekit::RegressorSchema::compile(gmekit::parse_schema_json(read_file(a->schema)));
        const gmekit::EncodedData data = gmekit::encode_dataset(
            raw, schema, a->outcome, {a->offset_col, a->log_offset}, a->trials);
        gmekit::ParametricModel model =
            gmekit::default_terms_model(schema, gmekit::family_from_string(a->family));
        const gmekit::FitResult fr = gmekit::fit_model(model, data);
        std::cerr << "deviance=" << fr.deviance << " iterations=" << fr.iterations << "\n";
        const std::string text = gmekit::model_to_json(
            gmekit::ModelBundle{std::move(model), fr.theta, fr.cov, {}});
        if (a->out.empty()) {
          std::cout << text;
        } else {
          std::ofstream os(a->out, std::ios::binary);
          if (!os) throw gmekit::ConfigError("cannot write '" + a->out + "'");
          os << text;
        }
      };
    });
  }

  // quantity
  {
    auto* cmd = app.add_subcommand("quantity", "effect components with uncertainty regions");
    auto c = std::make_shared<Context>();
    auto id = std::make_shared<std::string>("quantity");
    add_context_flags(cmd, *c);
    cmd->add_option("--id", *id, "request id (names the output files)");
    cmd->callback([&action, c, id] {
      action = [c, id] { run_single_request(*c, json{{"id", *id}, {"target", "gme"}}); };
    });
  }

  // band
  {
    auto* cmd = app.add_subcommand("band", "expectation or slope curve with bands");
    auto c = std::make_shared<Context>();
    struct BandArgs {
      std::string id = "band", target = "expectation";
      double from = 0.0, to = 1.0;
      std::size_t count = 41;
    };
    auto b = std::make_shared<BandArgs>();
    add_context_flags(cmd, *c);
    cmd->add_option("--id", b->id, "request id");
    cmd->add_option("--target", b->target, "expectation or slope");
    cmd->add_option("--from", b->from, "grid start")->required();
    cmd->add_option("--to", b->to, "grid end")->required();
    cmd->add_option("--count", b->count, "grid size");
    cmd->callback([&action, c, b] {
      action = [c, b] {
        if (b->target != "expectation" && b->target != "slope")
          throw gmekit::ConfigError("--target must be expectation or slope");
        run_single_request(
            *c, json{{"id", b->id},
                     {"target", b->target + std::string("-curve")},
                     {"grid", json{{"from", b->from}, {"to", b->to}, {"count", b->count}}}});
      };
    });
  }

  // compat
  {
    auto* cmd = app.add_subcommand(
        "compat", "classic effect summaries, cross-checked against their measure form");
    auto c = std::make_shared<Context>();
    struct CompatArgs {
      std::string id = "compat", kind;
      std::string x_rep, x_ref;
      std::optional<double> h, lo, hi;
      std::string grid;
      bool strict_means = false;
    };
    auto a = std::make_shared<CompatArgs>();
    add_context_flags(cmd, *c);
    cmd->add_option("--id", a->id, "request id");
    cmd->add_option("--kind", a->kind,
                    "AAP, AME, APR, MER, APM, MEM, fame, kaufman, apc or ale")
        ->required();
    cmd->add_option("--x-rep", a->x_rep, "representative point, comma separated");
    cmd->add_option("--x-ref", a->x_ref, "reference point, comma separated");
    cmd->add_option("--step", a->h, "forward-difference step width");
    cmd->add_option("--lo", a->lo, "comparison lower interest value");
    cmd->add_option("--hi", a->hi, "comparison upper interest value");
    cmd->add_option("--grid", a->grid, "ale grid, comma separated");
    cmd->add_flag("--strict-means", a->strict_means, "refuse categorical covariate means");
    cmd->callback([&action, c, a] {
      action = [c, a] {
        json req{{"id", a->id}};
        if (a->kind == "fame") {
          req["target"] = "fame";
          if (a->h) req["h"] = *a->h;
        } else if (a->kind == "kaufman") {
          req["target"] = "kaufman";
          if (a->x_ref.empty()) throw gmekit::ConfigError("kaufman needs --x-ref");
          req["x_ref"] = split_doubles(a->x_ref);
        } else if (a->kind == "apc") {
          req["target"] = "predictive-comparison";
          if (!a->lo || !a->hi) throw gmekit::ConfigError("apc needs --lo and --hi");
          req["lo"] = *a->lo;
          req["hi"] = *a->hi;
        } else if (a->kind == "ale") {
          req["target"] = "ale";
          if (a->grid.empty()) throw gmekit::ConfigError("ale needs --grid");
          req["grid"] = split_doubles(a->grid);
        } else {
          req["target"] = "classic";
          req["kind"] = a->kind;
          if (!a->x_rep.empty()) req["x_rep"] = split_doubles(a->x_rep);
          if (a->strict_means) req["mean_policy"] = "strict";
        }
        run_single_request(*c, std::move(req));
      };
    });
  }

  // ippd
  {
    auto* cmd = app.add_subcommand("ippd", "individualized predictive overlay");
    auto c = std::make_shared<Context>();
    struct IppdArgs {
      std::string id = "ippd", at;
      double from = 0.0, to = 1.0, trials = 1.0;
      std::size_t count = 51;
    };
    auto a = std::make_shared<IppdArgs>();
    add_context_flags(cmd, *c);
    cmd->add_option("--id", a->id, "request id");
    cmd->add_option("--at", a->at, "interest value(s), comma separated; empty = individualized");
    cmd->add_option("--grid-from", a->from, "outcome grid start")->required();
    cmd->add_option("--grid-to", a->to, "outcome grid end")->required();
    cmd->add_option("--grid-count", a->count, "outcome grid size");
    cmd->add_option("--trials-n", a->trials, "binomial trial count for the overlay");
    cmd->callback([&action, c, a] {
      action = [c, a] {
        json req{{"id", a->id},
                 {"target", "predictive"},
                 {"grid", json{{"from", a->from}, {"to", a->to}, {"count", a->count}}},
                 {"trials", a->trials}};
        if (!a->at.empty()) req["at"] = split_doubles(a->at);
        run_single_request(*c, std::move(req));
      };
    });
  }

  // standardize
  {
    auto* cmd = app.add_subcommand("standardize", "rescale a plot file to effect-size units");
    struct StdArgs {
      std::string in, out;
      double sd = 1.0;
      std::optional<double> mean;
      std::vector<double> window;
      std::vector<std::string> formats{"json"};
    };
    auto a = std::make_shared<StdArgs>();
    cmd->add_option("--in", a->in, "plot JSON produced by this tool")->required();
    cmd->add_option("--sd", a->sd, "outcome standard deviation")->required();
    cmd->add_option("--mean", a->mean, "outcome mean to subtract");
    cmd->add_option("--window", a->window, "abscissa window: lo hi")->expected(2);
    cmd->add_option("--format", a->formats, "outputs: json, csv, svg")->delimiter(',');
    cmd->add_option("-o,--out", a->out, "output directory (default: stdout)");
    cmd->callback([&action, a] {
      action = [a] {
        const json root = json::parse(read_file(a->in), nullptr, false);
        if (root.is_discarded() || root.value("schema", std::string()) != gmekit::kPlotSchemaTag)
          throw gmekit::ConfigError("--in is not a '" + std::string(gmekit::kPlotSchemaTag) +
                                    "' plot file");
        gmekit::StandardizeOptions opt;
        opt.sd_y = a->sd;
        opt.mean_y = a->mean;
        if (!a->window.empty())
          opt.window = gmekit::SupportSet::interval(a->window[0], a->window[1]);

        std::vector<gmekit::PlotSeries> series;
        for (const auto& js : root.value("series", json::array())) {
          gmekit::PlotSeries s;
          s.id = js.value("id", std::string());
          s.kind = js.value("kind", std::string("curve"));
          for (auto it : js.value("meta", json::object()).items())
            s.meta[it.key()] = it.value().get<std::string>();
          for (const auto& jp : js.value("points", json::array())) {
            gmekit::SeriesPoint p;
            p.x = jp.value("x", 0.0);
            p.label = jp.value("label", std::string());
            p.point = jp.value("point", 0.0);
            for (const auto& iv : jp.value("intervals", json::array()))
              p.intervals.push_back({iv[0].get<double>(), iv[1].get<double>()});
            s.points.push_back(std::move(p));
          }
          s.meta["standardization"] = gmekit::describe_standardization(opt);
          series.push_back(gmekit::standardized_series(std::move(s), opt));
        }

        gmekit::RunProducts products;
        const std::string stem = fs::path(a->in).stem().string() + "_std";
        for (const std::string& f : a->formats) {
          if (f == "json") products.files.push_back({stem + ".json", gmekit::emit_json(series)});
          else if (f == "csv") products.files.push_back({stem + ".csv", gmekit::emit_csv(series)});
          else if (f == "svg") products.files.push_back({stem + ".svg", gmekit::emit_svg(series)});
          else throw gmekit::ConfigError("--format must be json, csv or svg");
        }
        deliver(products, a->out);
      };
    });
  }

  try {
    app.parse(argc, argv);
    action();
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const gmekit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gmekit::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const gmekit::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
