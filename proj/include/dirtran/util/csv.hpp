#ifndef DIRTRAN_UTIL_CSV_HPP
#define DIRTRAN_UTIL_CSV_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dirtran/errors.hpp"

namespace dirtran::csv {

/// Fields are simple tokens (numbers, identifiers); no quoting or escaping.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw ConfigError("csv: no column '" + name + "'");
  }
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline void write(std::ostream& out, const Table& table) {
  for (size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << "\n";
  }
}

inline void write_file(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("csv: cannot open '" + path + "' for writing");
  write(out, table);
  if (!out.good()) throw ConfigError("csv: write failed for '" + path + "'");
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline Table read(std::istream& in) {
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      table.header = split_line(line);
      first = false;
    } else {
      table.rows.push_back(split_line(line));
    }
  }
  return table;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open '" + path + "'");
  return read(in);
}

}  // namespace dirtran::csv

#endif  // DIRTRAN_UTIL_CSV_HPP
