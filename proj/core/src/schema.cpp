#include "gmekit/schema.hpp"

#include <algorithm>
#include <set>

#include "gmekit/errors.hpp"

namespace gmekit {

RegressorSchema RegressorSchema::compile(SchemaSpec spec) {
  RegressorSchema out;
  if (spec.columns.empty()) throw ConfigError("schema has no columns");

  std::set<std::string> seen;
  int offset = 0;
  for (const auto& c : spec.columns) {
    if (c.name.empty()) throw ConfigError("schema column without a name");
    if (!seen.insert(c.name).second)
      throw ConfigError("duplicate schema column '" + c.name + "'");

    CompiledColumn cc;
    cc.name = c.name;
    cc.kind = c.kind;
    cc.offset = offset;
    if (c.kind == ColumnKind::Metric) {
      cc.width = 1;
    } else {
      if (c.levels.size() < 2)
        throw ConfigError("categorical column '" + c.name + "' needs at least two levels");
      std::set<std::string> lvl_seen;
      for (const auto& l : c.levels)
        if (!lvl_seen.insert(l).second)
          throw ConfigError("duplicate level '" + l + "' in column '" + c.name + "'");
      cc.reference = c.reference.empty() ? c.levels.front() : c.reference;
      if (!lvl_seen.count(cc.reference))
        throw ConfigError("reference level '" + cc.reference + "' not among levels of '" +
                          c.name + "'");
      for (const auto& l : c.levels)
        if (l != cc.reference) cc.coded_levels.push_back(l);
      cc.width = static_cast<int>(cc.coded_levels.size());
    }
    offset += cc.width;
    out.cols_.push_back(std::move(cc));
  }
  out.p_ = offset;

  for (const auto& ia : spec.interactions) {
    if (ia.columns.size() != 2)
      throw ConfigError("interactions are pairwise; got " + std::to_string(ia.columns.size()) +
                        " columns");
    for (const auto& n : ia.columns)
      if (!seen.count(n)) throw ConfigError("interaction references unknown column '" + n + "'");
    if (ia.columns[0] == ia.columns[1])
      throw ConfigError("interaction of a column with itself is not supported");
  }

  const auto& in = spec.interest;
  if (!in.column.empty() && in.is_interaction())
    throw ConfigError("interest must be a column or an interaction, not both");
  if (!in.column.empty() && !seen.count(in.column))
    throw ConfigError("interest column '" + in.column + "' not in schema");
  if (in.is_interaction()) {
    bool declared = std::any_of(spec.interactions.begin(), spec.interactions.end(),
                                [&](const InteractionSpec& ia) {
                                  return ia.columns == in.interaction ||
                                         (ia.columns.size() == 2 && in.interaction.size() == 2 &&
                                          ia.columns[0] == in.interaction[1] &&
                                          ia.columns[1] == in.interaction[0]);
                                });
    if (!declared) throw ConfigError("interest interaction is not among declared interactions");
  }

  out.spec_ = std::move(spec);
  return out;
}

int RegressorSchema::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < cols_.size(); ++i)
    if (cols_[i].name == name) return static_cast<int>(i);
  throw ConfigError("unknown column '" + name + "'");
}

const CompiledColumn& RegressorSchema::column(const std::string& name) const {
  return cols_[static_cast<std::size_t>(column_index(name))];
}

int RegressorSchema::level_index(const std::string& column, const std::string& level) const {
  const CompiledColumn& c = this->column(column);
  if (c.kind != ColumnKind::Categorical)
    throw ConfigError("column '" + column + "' is not categorical");
  for (int j = 0; j < c.width; ++j)
    if (c.coded_levels[static_cast<std::size_t>(j)] == level) return c.offset + j;
  if (level == c.reference)
    throw ConfigError("level '" + level + "' is the reference of '" + column +
                      "' and has no encoded index");
  throw ConfigError("unknown level '" + level + "' for column '" + column + "'");
}

std::vector<double> RegressorSchema::encode(std::span<const RawValue> record) const {
  if (record.size() != cols_.size())
    throw DataError("record has " + std::to_string(record.size()) + " values, schema expects " +
                    std::to_string(cols_.size()));
  std::vector<double> x(static_cast<std::size_t>(p_), 0.0);
  for (std::size_t i = 0; i < cols_.size(); ++i) {
    const CompiledColumn& c = cols_[i];
    if (c.kind == ColumnKind::Metric) {
      if (!std::holds_alternative<double>(record[i]))
        throw DataError("non-numeric value for metric column '" + c.name + "'");
      x[static_cast<std::size_t>(c.offset)] = std::get<double>(record[i]);
    } else {
      if (!std::holds_alternative<std::string>(record[i]))
        throw DataError("expected a level label for categorical column '" + c.name + "'");
      const std::string& lvl = std::get<std::string>(record[i]);
      if (lvl == c.reference) continue;  // zero block
      bool found = false;
      for (int j = 0; j < c.width; ++j) {
        if (c.coded_levels[static_cast<std::size_t>(j)] == lvl) {
          x[static_cast<std::size_t>(c.offset + j)] = 1.0;
          found = true;
          break;
        }
      }
      if (!found)
        throw DataError("unknown level '" + lvl + "' for column '" + c.name + "'");
    }
  }
  return x;
}

}  // namespace gmekit
