#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ovio {
namespace csv {

/// Column-oriented table; the contract format for every exported result.
/// Comma separated, '.' decimal point, header row, UTF-8, LF line endings,
/// values at 17 significant digits (lossless double round-trip).
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;

  std::size_t rows() const { return cols.empty() ? 0 : cols.front().size(); }
};

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_table(const std::string& path, const Table& table) {
  if (table.names.size() != table.cols.size()) {
    throw std::invalid_argument("write_table: names/columns mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_table: cannot open " + path);
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    if (i) out << ',';
    out << table.names[i];
  }
  out << '\n';
  const std::size_t n = table.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < table.cols.size(); ++c) {
      if (c) out << ',';
      out << format_value(table.cols[c][r]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_table: write failed for " + path);
}

inline Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_table: cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_table: missing header in " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.names.push_back(cell);
  t.cols.assign(t.names.size(), {});
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= t.cols.size()) {
        throw std::runtime_error("read_table: too many columns in " + path);
      }
      t.cols[c++].push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (c != t.cols.size()) {
      throw std::runtime_error("read_table: short row in " + path);
    }
  }
  return t;
}

}  // namespace csv
}  // namespace ovio
