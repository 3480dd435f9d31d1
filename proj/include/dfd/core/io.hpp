#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "dfd/core/require.hpp"

namespace dfd {

/// Shortest round-trip decimal representation of a double, locale-independent
/// ('.' decimal point always). Identical doubles format to identical strings,
/// which is what makes rerun outputs byte-comparable.
inline std::string format_double(double x) {
  char buf[64];
  const std::to_chars_result r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

/// Locale-independent parse; accepts the format_double output exactly.
inline double parse_double(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  const std::from_chars_result r = std::from_chars(begin, end, value);
  DFD_REQUIRE(r.ec == std::errc() && r.ptr != begin, "parse_double: bad number '", s, "'");
  return value;
}

/// Writes a matrix as CSV: one line per row, comma-separated, '.' decimal.
inline void write_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  DFD_REQUIRE(out.good(), "write_csv: cannot open '", path, "'");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  DFD_REQUIRE(out.good(), "write_csv: write failed for '", path, "'");
}

/// Writes a vector as a single-column CSV (one value per line).
inline void write_csv(const std::string& path, const Eigen::VectorXd& v) {
  write_csv(path, Eigen::MatrixXd(v));
}

/// Reads a CSV matrix written by write_csv (rectangular, comma-separated).
inline Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  DFD_REQUIRE(in.good(), "read_csv_matrix: cannot open '", path, "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(parse_double(field));
    if (!rows.empty())
      DFD_REQUIRE(row.size() == rows.front().size(), "read_csv_matrix: ragged row in '",
                  path, "'");
    rows.push_back(std::move(row));
  }
  DFD_REQUIRE(!rows.empty(), "read_csv_matrix: empty file '", path, "'");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

/// Reads a vector from CSV (single column or single row).
inline Eigen::VectorXd read_csv_vector(const std::string& path) {
  const Eigen::MatrixXd m = read_csv_matrix(path);
  DFD_REQUIRE(m.rows() == 1 || m.cols() == 1, "read_csv_vector: '", path,
              "' is not a vector (", m.rows(), "x", m.cols(), ")");
  if (m.cols() == 1) return m.col(0);
  return m.row(0).transpose();
}

/// Reads a whole file into a string (for byte-level comparisons in tests).
inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  DFD_REQUIRE(in.good(), "read_file: cannot open '", path, "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dfd
