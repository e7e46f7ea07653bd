#pragma once

// Minimal numeric CSV reader for the command-line tool. Rows are
// observations; a first row that does not parse as numbers is a header.

#include <charconv>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sphericity/spectra.hpp"

namespace sphericity::cli {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Reads an n x p table (one observation per row) into a p x n DataMatrix.
/// With `transpose`, the file is read as p x n (one variable per row).
inline DataMatrix read_csv(std::istream& in, bool transpose = false) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = detail::split(view, ',');
    std::vector<double> values;
    values.reserve(fields.size());
    bool numeric = true;
    for (const auto f : fields) {
      double v = 0.0;
      if (!detail::parse_double(f, v)) {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = fields.size();
        continue;
      }
      throw CsvError("line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                     " fields, found " + std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw CsvError("no numeric rows");

  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(width);
  Eigen::MatrixXd m(transpose ? r : c, transpose ? c : r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (transpose) {
        m(i, j) = v;
      } else {
        m(j, i) = v;
      }
    }
  }
  try {
    return DataMatrix(std::move(m));
  } catch (const DomainError& e) {
    throw CsvError(e.what());
  }
}

}  // namespace sphericity::cli
