#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gmekit/schema.hpp"

namespace gmekit {

// Raw tabular data as read from CSV; cells keep their text until a schema
// decides whether they are numbers or level labels.
struct Dataset {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // DataError when absent
  std::size_t n() const { return rows.size(); }
};

Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const Dataset& d);

struct OffsetSpec {
  std::string column;
  bool log = false;  // apply natural log to the column values
};

// Schema-encoded design data. x rows have length schema.p(); outcome, offset
// and trials are empty or length n.
struct EncodedData {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<double> offset;
  std::vector<double> trials;

  std::size_t n() const { return x.size(); }
  double offset_at(std::size_t i) const { return offset.empty() ? 0.0 : offset[i]; }
  double trials_at(std::size_t i) const { return trials.empty() ? 1.0 : trials[i]; }
};

EncodedData encode_dataset(const Dataset& data, const RegressorSchema& schema,
                           const std::string& outcome = {},
                           const OffsetSpec& offset = {},
                           const std::string& trials = {});

}  // namespace gmekit
