#pragma once

#include <string>
#include <vector>

#include "gmekit/dataset.hpp"
#include "gmekit/model.hpp"
#include "gmekit/quantity.hpp"
#include "gmekit/uncertainty.hpp"

namespace gmekit {

// JSON-facing IO. The vendored JSON library stays an implementation detail;
// the public surface trades in strings.

SchemaSpec parse_schema_json(const std::string& text);
std::string schema_to_json(const SchemaSpec& spec);

struct ModelBundle {
  ParametricModel model;
  Theta theta;
  std::vector<std::vector<double>> cov;  // empty when absent
  std::string draws_file;                // empty when absent
};

ModelBundle parse_model_json(const std::string& text, const RegressorSchema& schema);
std::string model_to_json(const ModelBundle& bundle);

// Measure grammar: {"dirac": v}, {"uniform": [a,b]}, {"points": {...}},
// {"empirical": {...}}, {"product": [...]}, {"interaction": [...]},
// {"normalize": {"of": ..., "to": ...}}. Empirical specs resolve against the
// run's encoded dataset.
Measure parse_measure_json(const std::string& text, const EncodedData& data);
SupportSet parse_support_set_json(const std::string& text);

QuantitySpec parse_quantity_spec_json(const std::string& text, const EncodedData& data);

struct ResultMeta {
  std::string id;
  std::string target;
  std::uint64_t seed = 0;
  std::size_t n_draws = 0;
  std::string note;
};

std::string result_to_json(const QuantityResult& r, const ResultMeta& meta);

}  // namespace gmekit
