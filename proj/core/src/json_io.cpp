#include "gmekit/json_io.hpp"

#include "gmekit/errors.hpp"
#include "gmekit/fit.hpp"
#include "json.hpp"

namespace gmekit {

using nlohmann::json;

namespace {

json parse_or_throw(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(std::string(what) + ": malformed JSON");
  return j;
}

double as_number(const json& j, const char* what) {
  if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return j.get<double>();
}

std::vector<double> as_vector(const json& j, const char* what) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be a number or array");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(as_number(e, what));
  return out;
}

}  // namespace

SchemaSpec parse_schema_json(const std::string& text) {
  const json j = parse_or_throw(text, "schema");
  SchemaSpec spec;
  if (!j.contains("columns") || !j["columns"].is_array())
    throw ConfigError("schema: 'columns' array is required");

  for (const auto& jc : j["columns"]) {
    ColumnSpec c;
    if (!jc.contains("name")) throw ConfigError("schema: column without a name");
    c.name = jc["name"].get<std::string>();
    const std::string kind = jc.value("kind", std::string("metric"));
    if (kind == "metric") {
      c.kind = ColumnKind::Metric;
    } else if (kind == "categorical") {
      c.kind = ColumnKind::Categorical;
      if (!jc.contains("levels"))
        throw ConfigError("schema: categorical column '" + c.name + "' needs levels");
      for (const auto& l : jc["levels"]) c.levels.push_back(l.get<std::string>());
      c.reference = jc.value("reference", c.levels.empty() ? std::string() : c.levels.front());
    } else {
      throw ConfigError("schema: unknown column kind '" + kind + "'");
    }
    spec.columns.push_back(std::move(c));
  }

  for (const auto& ji : j.value("interactions", json::array())) {
    InteractionSpec ia;
    for (const auto& n : ji) ia.columns.push_back(n.get<std::string>());
    spec.interactions.push_back(std::move(ia));
  }

  if (j.contains("interest")) {
    const json& ji = j["interest"];
    if (ji.is_string()) {
      spec.interest.column = ji.get<std::string>();
    } else if (ji.is_object() && ji.contains("column")) {
      spec.interest.column = ji["column"].get<std::string>();
    } else if (ji.is_object() && ji.contains("interaction")) {
      for (const auto& n : ji["interaction"])
        spec.interest.interaction.push_back(n.get<std::string>());
    } else {
      throw ConfigError("schema: interest must be a column name or {\"interaction\": [a,b]}");
    }
  }
  return spec;
}

std::string schema_to_json(const SchemaSpec& spec) {
  json j;
  j["columns"] = json::array();
  for (const auto& c : spec.columns) {
    json jc;
    jc["name"] = c.name;
    jc["kind"] = c.kind == ColumnKind::Metric ? "metric" : "categorical";
    if (c.kind == ColumnKind::Categorical) {
      jc["levels"] = c.levels;
      jc["reference"] = c.reference;
    }
    j["columns"].push_back(std::move(jc));
  }
  j["interactions"] = json::array();
  for (const auto& ia : spec.interactions) j["interactions"].push_back(ia.columns);
  if (!spec.interest.column.empty())
    j["interest"] = spec.interest.column;
  else if (spec.interest.is_interaction())
    j["interest"] = json{{"interaction", spec.interest.interaction}};
  return j.dump(2) + "\n";
}

namespace {

// Term factors accept encoded indices, metric column names, or "col=level"
// dummies.
int resolve_factor(const json& jf, const RegressorSchema& schema) {
  if (jf.is_number_integer()) return jf.get<int>();
  if (!jf.is_string()) throw ConfigError("model: term factor must be an index or a name");
  const std::string s = jf.get<std::string>();
  const auto eq = s.find('=');
  if (eq == std::string::npos) {
    const CompiledColumn& c = schema.column(s);
    if (c.kind != ColumnKind::Metric)
      throw ConfigError("model: factor '" + s + "' names a categorical column; use '" + s +
                        "=<level>'");
    return c.offset;
  }
  return schema.level_index(s.substr(0, eq), s.substr(eq + 1));
}

}  // namespace

ModelBundle parse_model_json(const std::string& text, const RegressorSchema& schema) {
  const json j = parse_or_throw(text, "model");
  if (!j.contains("family")) throw ConfigError("model: 'family' is required");
  const Family family = family_from_string(j["family"].get<std::string>());
  if (!j.contains("beta")) throw ConfigError("model: 'beta' is required");
  Theta theta;
  theta.beta = as_vector(j["beta"], "model beta");
  if (j.contains("v")) theta.v = as_vector(j["v"], "model v");

  std::vector<Term> terms;
  int beta_len = static_cast<int>(theta.beta.size());
  if (j.contains("terms")) {
    for (const auto& jt : j["terms"]) {
      Term t;
      if (!jt.contains("coef")) throw ConfigError("model: term without 'coef'");
      t.coef = jt["coef"].get<int>();
      for (const auto& jf : jt.value("factors", json::array()))
        t.factors.push_back(resolve_factor(jf, schema));
      terms.push_back(std::move(t));
    }
  } else {
    terms = default_terms_model(schema, family).terms();
  }
  const int v_len = static_cast<int>(theta.v.size());
  ParametricModel model(family, std::move(terms), beta_len, v_len, schema.p());

  std::vector<std::vector<double>> cov;
  if (j.contains("cov")) {
    for (const auto& row : j["cov"]) cov.push_back(as_vector(row, "model cov row"));
    if (static_cast<int>(cov.size()) != beta_len)
      throw ConfigError("model: cov must be beta-by-beta");
    for (const auto& row : cov)
      if (static_cast<int>(row.size()) != beta_len)
        throw ConfigError("model: cov must be beta-by-beta");
  }
  std::string draws = j.value("draws_file", std::string());
  return ModelBundle{std::move(model), std::move(theta), std::move(cov), std::move(draws)};
}

std::string model_to_json(const ModelBundle& bundle) {
  json j;
  j["family"] = family_to_string(bundle.model.family());
  j["terms"] = json::array();
  for (const Term& t : bundle.model.terms())
    j["terms"].push_back(json{{"coef", t.coef}, {"factors", t.factors}});
  j["beta"] = bundle.theta.beta;
  if (!bundle.theta.v.empty()) j["v"] = bundle.theta.v;
  if (!bundle.cov.empty()) j["cov"] = bundle.cov;
  if (!bundle.draws_file.empty()) j["draws_file"] = bundle.draws_file;
  return j.dump(2) + "\n";
}

namespace {

SupportSet support_from_json(const json& j);

Measure measure_from_json(const json& j, const EncodedData& data) {
  if (!j.is_object() || j.size() != 1)
    throw ConfigError("measure: expected an object with one tag key");
  const auto& [tag, body] = *j.items().begin();

  if (tag == "dirac") return Measure::dirac(as_vector(body, "dirac point"));
  if (tag == "uniform") {
    const std::vector<double> ab = as_vector(body, "uniform bounds");
    if (ab.size() != 2) throw ConfigError("measure: uniform takes [a, b]");
    return Measure::uniform(ab[0], ab[1]);
  }
  if (tag == "points") {
    if (!body.is_object() || !body.contains("points") || !body.contains("weights"))
      throw ConfigError("measure: points takes {\"points\": [...], \"weights\": [...]} ");
    std::vector<std::vector<double>> pts;
    for (const auto& p : body["points"]) pts.push_back(as_vector(p, "point"));
    return Measure::discrete(std::move(pts), as_vector(body["weights"], "weights"));
  }
  if (tag == "empirical") {
    if (data.n() == 0) throw ConfigError("measure: empirical specs need a dataset in scope");
    if (body.is_object() && body.contains("columns")) {
      std::vector<int> cols;
      for (const auto& c : body["columns"]) cols.push_back(c.get<int>());
      return Measure::empirical_marginal(data.x, cols);
    }
    if (body.is_object() && body.empty()) return Measure::empirical_joint(data.x);
    throw ConfigError("measure: empirical takes {} or {\"columns\": [...]}");
  }
  if (tag == "product") {
    std::vector<Measure> parts;
    for (const auto& p : body) parts.push_back(measure_from_json(p, data));
    return Measure::product(std::move(parts));
  }
  if (tag == "interaction") {
    const json& of = body.is_object() ? body.at("of") : body;
    const auto seed = body.is_object() ? body.value("seed", std::uint64_t{0}) : std::uint64_t{0};
    if (!of.is_array() || of.size() != 2)
      throw ConfigError("measure: interaction takes two factor measures");
    return interaction_measure(measure_from_json(of[0], data), measure_from_json(of[1], data),
                               seed);
  }
  if (tag == "normalize") {
    if (!body.is_object() || !body.contains("of") || !body.contains("to"))
      throw ConfigError("measure: normalize takes {\"of\": measure, \"to\": set}");
    return measure_from_json(body["of"], data).normalized(support_from_json(body["to"]));
  }
  throw ConfigError("measure: unknown tag '" + tag + "'");
}

SupportSet support_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1)
    throw ConfigError("support set: expected an object with one tag key");
  const auto& [tag, body] = *j.items().begin();
  if (tag == "interval") {
    const std::vector<double> ab = as_vector(body, "interval bounds");
    if (ab.size() != 2) throw ConfigError("support set: interval takes [a, b]");
    return SupportSet::interval(ab[0], ab[1]);
  }
  if (tag == "points") {
    std::vector<std::vector<double>> pts;
    for (const auto& p : body) pts.push_back(as_vector(p, "point"));
    return SupportSet::finite_points(std::move(pts));
  }
  if (tag == "basis") return SupportSet::basis(body.get<int>());
  if (tag == "product") {
    std::vector<SupportSet> parts;
    for (const auto& p : body) parts.push_back(support_from_json(p));
    return SupportSet::product(std::move(parts));
  }
  throw ConfigError("support set: unknown tag '" + tag + "'");
}

}  // namespace

Measure parse_measure_json(const std::string& text, const EncodedData& data) {
  return measure_from_json(parse_or_throw(text, "measure"), data);
}

SupportSet parse_support_set_json(const std::string& text) {
  return support_from_json(parse_or_throw(text, "support set"));
}

QuantitySpec parse_quantity_spec_json(const std::string& text, const EncodedData& data) {
  const json j = parse_or_throw(text, "quantity spec");
  QuantitySpec spec;
  if (j.contains("assumption"))
    spec.assumption = assumption_from_string(j["assumption"].get<std::string>());
  if (j.contains("policy")) {
    const std::string p = j["policy"].get<std::string>();
    if (p == "combined")
      spec.policy = InteractionPolicy::Combined;
    else if (p == "separated")
      spec.policy = InteractionPolicy::Separated;
    else
      throw ConfigError("quantity spec: policy must be 'combined' or 'separated'");
  }
  if (j.contains("interest_measure"))
    spec.interest_measure = measure_from_json(j["interest_measure"], data);
  if (j.contains("covariate_measure"))
    spec.covariate_measure = measure_from_json(j["covariate_measure"], data);
  if (j.contains("covariate_set")) spec.covariate_set = support_from_json(j["covariate_set"]);
  for (const auto& cell : j.value("partition", json::array())) {
    const std::vector<double> ab = as_vector(cell, "partition cell");
    if (ab.size() != 2) throw ConfigError("quantity spec: partition cells are [a, b]");
    spec.partition.emplace_back(ab[0], ab[1]);
  }
  if (j.contains("offset")) spec.offset = as_number(j["offset"], "offset");
  return spec;
}

std::string result_to_json(const QuantityResult& r, const ResultMeta& meta) {
  json j;
  j["id"] = meta.id;
  j["target"] = meta.target;
  j["seed"] = meta.seed;
  j["n_draws"] = meta.n_draws;
  if (!meta.note.empty()) j["note"] = meta.note;
  j["point"] = r.point;
  if (!r.labels.empty()) j["labels"] = r.labels;
  j["regions"] = json::array();
  for (const Region& reg : r.regions) {
    json jr;
    jr["kind"] = reg.kind == RegionKind::Hdr ? "hdr" : "equal-tailed";
    jr["alpha"] = reg.alpha;
    jr["intervals"] = json::array();
    for (const Interval& iv : reg.intervals) jr["intervals"].push_back({iv.lo, iv.hi});
    j["regions"].push_back(std::move(jr));
  }
  if (!r.draw_values.empty()) j["draws"] = r.draw_values;
  return j.dump(2) + "\n";
}

}  // namespace gmekit
