#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gmekit {

enum class ColumnKind { Metric, Categorical };

// Raw cell as read from a CSV: number or level label.
using RawValue = std::variant<double, std::string>;

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Metric;
  std::vector<std::string> levels;  // categorical, declared order
  std::string reference;            // must be one of levels
};

struct InteractionSpec {
  std::vector<std::string> columns;  // exactly two declared columns
};

// Interest designation: either a single column or one declared interaction.
struct InterestSpec {
  std::string column;
  std::vector<std::string> interaction;
  bool is_interaction() const { return !interaction.empty(); }
};

struct SchemaSpec {
  std::vector<ColumnSpec> columns;
  std::vector<InteractionSpec> interactions;
  InterestSpec interest;
};

struct CompiledColumn {
  std::string name;
  ColumnKind kind;
  int offset = 0;  // first encoded index of this column's block
  int width = 1;   // metric: 1, categorical: n_levels - 1
  std::vector<std::string> coded_levels;  // non-reference levels, declared order
  std::string reference;
};

// Dummy coding with the declared reference excluded; the reference category is
// the all-zero block. Encoded column order follows schema declaration order.
class RegressorSchema {
 public:
  static RegressorSchema compile(SchemaSpec spec);

  int p() const { return p_; }
  const std::vector<CompiledColumn>& columns() const { return cols_; }
  const SchemaSpec& spec() const { return spec_; }

  int column_index(const std::string& name) const;  // ConfigError when absent
  const CompiledColumn& column(const std::string& name) const;

  // Encoded index of a (categorical column, level) pair; the reference level
  // has no encoded index and raises ConfigError.
  int level_index(const std::string& column, const std::string& level) const;

  std::vector<double> encode(std::span<const RawValue> record) const;

 private:
  SchemaSpec spec_;
  std::vector<CompiledColumn> cols_;
  int p_ = 0;
};

}  // namespace gmekit
