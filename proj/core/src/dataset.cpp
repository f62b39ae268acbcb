#include "gmekit/dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gmekit/errors.hpp"

namespace gmekit {

int Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw DataError("missing column '" + name + "' in dataset");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw DataError("cannot parse '" + s + "' as a number for " + what);
  return v;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  d.names = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != d.names.size())
      throw DataError("CSV row " + std::to_string(d.rows.size() + 2) + " has " +
                      std::to_string(row.size()) + " cells, header has " +
                      std::to_string(d.names.size()));
    d.rows.push_back(std::move(row));
  }
  if (d.rows.empty()) throw DataError("CSV has a header but no rows");
  return d;
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  return read_csv(f);
}

void write_csv(std::ostream& out, const Dataset& d) {
  auto put = [&](const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) {
      out << cell;
      return;
    }
    out << '"';
    for (char c : cell) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  };
  for (std::size_t i = 0; i < d.names.size(); ++i) {
    if (i) out << ',';
    put(d.names[i]);
  }
  out << '\n';
  for (const auto& row : d.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      put(row[i]);
    }
    out << '\n';
  }
}

EncodedData encode_dataset(const Dataset& data, const RegressorSchema& schema,
                           const std::string& outcome, const OffsetSpec& offset,
                           const std::string& trials) {
  EncodedData out;
  std::vector<int> col_of(schema.columns().size(), -1);
  for (std::size_t i = 0; i < schema.columns().size(); ++i)
    col_of[i] = data.column_index(schema.columns()[i].name);

  const int y_col = outcome.empty() ? -1 : data.column_index(outcome);
  const int off_col = offset.column.empty() ? -1 : data.column_index(offset.column);
  const int tri_col = trials.empty() ? -1 : data.column_index(trials);

  out.x.reserve(data.n());
  std::vector<RawValue> record(schema.columns().size());
  for (std::size_t r = 0; r < data.n(); ++r) {
    const auto& row = data.rows[r];
    for (std::size_t i = 0; i < schema.columns().size(); ++i) {
      const std::string& cell = row[static_cast<std::size_t>(col_of[i])];
      if (schema.columns()[i].kind == ColumnKind::Metric)
        record[i] = parse_number(cell, "column '" + schema.columns()[i].name + "'");
      else
        record[i] = cell;
    }
    out.x.push_back(schema.encode(record));
    if (y_col >= 0)
      out.y.push_back(parse_number(row[static_cast<std::size_t>(y_col)], "outcome '" + outcome + "'"));
    if (off_col >= 0) {
      double v = parse_number(row[static_cast<std::size_t>(off_col)], "offset column");
      if (offset.log) {
        if (!(v > 0.0)) throw DataError("offset column must be positive for log transform");
        v = std::log(v);
      }
      out.offset.push_back(v);
    }
    if (tri_col >= 0) {
      const double v = parse_number(row[static_cast<std::size_t>(tri_col)], "trials column");
      if (!(v > 0.0)) throw DataError("trials must be positive");
      out.trials.push_back(v);
    }
  }
  return out;
}

}  // namespace gmekit
