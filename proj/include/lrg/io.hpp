#pragma once

// CSV ingestion and emission. Tables are plain comma-separated text with one
// header row; cells must parse fully as numbers and parse failures report the
// 1-based file line and column.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrg/errors.hpp"
#include "lrg/graph.hpp"

namespace lrg {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

inline double parse_cell(const std::string& cell, int line_no, int col_no) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw validation_error("row " + std::to_string(line_no) + ", column " +
                           std::to_string(col_no) + ": cannot parse '" + cell + "' as a number");
  return value;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

/// Round-trip-exact text for a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SignalTable {
  std::vector<std::string> node_names;
  Matrix values;  // one row per time sample, one column per node
};

/// Signal CSV: header row of node names, then one numeric row per sample.
inline SignalTable read_signal_table(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw validation_error("'" + path + "' is empty");

  SignalTable table;
  table.node_names = detail::split_csv_line(lines[0]);
  const int cols = static_cast<int>(table.node_names.size());
  const int rows = static_cast<int>(lines.size()) - 1;
  table.values.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto cells = detail::split_csv_line(lines[r + 1]);
    if (static_cast<int>(cells.size()) != cols)
      throw validation_error("row " + std::to_string(r + 2) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(cols));
    for (int c = 0; c < cols; ++c) table.values(r, c) = detail::parse_cell(cells[c], r + 2, c + 1);
  }
  return table;
}

/// Coordinate CSV: header `name,lat,lon`, one node per row; row order defines
/// node indices.
inline std::vector<Coordinate> read_coords_csv(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw validation_error("'" + path + "' is empty");
  const auto header = detail::split_csv_line(lines[0]);
  if (header.size() != 3 || header[0] != "name" || header[1] != "lat" || header[2] != "lon")
    throw validation_error("'" + path + "' must start with the header 'name,lat,lon'");

  std::vector<Coordinate> coords;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = detail::split_csv_line(lines[r]);
    if (cells.size() != 3)
      throw validation_error("row " + std::to_string(r + 1) + " has " +
                             std::to_string(cells.size()) + " cells, expected 3");
    coords.push_back(Coordinate{cells[0],
                                detail::parse_cell(cells[1], static_cast<int>(r + 1), 2),
                                detail::parse_cell(cells[2], static_cast<int>(r + 1), 3)});
  }
  return coords;
}

inline void write_adjacency_csv(const Matrix& adjacency, const std::vector<std::string>& names,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  for (int j = 0; j < adjacency.cols(); ++j) {
    if (j) out << ',';
    out << (j < static_cast<int>(names.size()) ? names[j] : "node_" + std::to_string(j + 1));
  }
  out << '\n';
  for (int i = 0; i < adjacency.rows(); ++i) {
    for (int j = 0; j < adjacency.cols(); ++j) {
      if (j) out << ',';
      out << format_double(adjacency(i, j));
    }
    out << '\n';
  }
  if (!out) throw io_error("failed writing '" + path + "'");
}

inline Matrix read_adjacency_csv(const std::string& path) {
  const SignalTable table = read_signal_table(path);
  if (table.values.rows() != table.values.cols())
    throw validation_error("'" + path + "' is not square: " + std::to_string(table.values.rows()) +
                           " rows vs " + std::to_string(table.values.cols()) + " columns");
  return table.values;
}

}  // namespace lrg
