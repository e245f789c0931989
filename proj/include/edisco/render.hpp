#pragma once
// Color-coded rendering of lower-triangular discovery matrices: threshold
// bins to RGB (Jeffreys scale for e-values, Fisher scale for p-values),
// binary PPM (P6) images, and a 17-significant-digit CSV round-trip format.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csvio.hpp"
#include "discovery.hpp"
#include "evalues.hpp"

namespace edisco {

struct rgb {
  std::uint8_t red = 0, green = 0, blue = 0;
  bool operator==(const rgb&) const = default;
};

// Ascending bin edges with one more color than edges. A value lands in
// palette[number of edges <= value], so boundary values take the
// stronger-evidence side of each threshold.
struct color_map {
  std::vector<double> edges;
  std::vector<rgb> palette;
  rgb background{255, 255, 255};

  rgb color_for(double value) const {
    if (std::isnan(value))
      throw std::domain_error("cannot color a NaN value");
    const std::size_t bin = static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
    return palette[bin];
  }

  // e-value scale at 1, sqrt(10), 10, 10^1.5, 100: dark green, green,
  // yellow, red, dark red, black.
  static color_map jeffreys() {
    color_map map;
    map.edges = {1.0, std::sqrt(10.0), 10.0, std::pow(10.0, 1.5), 100.0};
    map.palette = {{0, 100, 0}, {0, 200, 0},  {255, 255, 0},
                   {255, 0, 0}, {139, 0, 0},  {0, 0, 0}};
    return map;
  }

  // p-value scale: red below 0.01, yellow to 0.05, green above.
  static color_map fisher() {
    color_map map;
    map.edges = {0.01, 0.05};
    map.palette = {{255, 0, 0}, {255, 255, 0}, {0, 200, 0}};
    return map;
  }
};

inline rgb jeffreys_color(evalue e) {
  require_evalue(e);
  static const color_map map = color_map::jeffreys();
  return map.color_for(e);
}

inline rgb fisher_color(pvalue p) {
  require_pvalue(p);
  static const color_map map = color_map::fisher();
  return map.color_for(p);
}

struct crop_region {
  std::size_t rows = 0;
  std::size_t columns = 0;
};

namespace detail {

// row_at(r) yields row r (1-based) with r entries; cells right of a row get
// the background color.
template <class RowAt>
std::string render_ppm(std::size_t size, RowAt&& row_at, const color_map& map,
                       std::optional<crop_region> crop) {
  std::size_t height = size, width = size;
  if (crop) {
    if (crop->rows < 1 || crop->columns < 1 || crop->rows > size ||
        crop->columns > size)
      throw std::domain_error("crop exceeds the matrix bounds");
    height = crop->rows;
    width = crop->columns;
  }
  std::string out = "P6\n" + std::to_string(width) + " " +
                    std::to_string(height) + "\n255\n";
  out.reserve(out.size() + 3 * width * height);
  for (std::size_t r = 1; r <= height; ++r) {
    const std::span<const double> row = row_at(r);
    for (std::size_t j = 1; j <= width; ++j) {
      const rgb c = j <= row.size() ? map.color_for(row[j - 1]) : map.background;
      out.push_back(static_cast<char>(c.red));
      out.push_back(static_cast<char>(c.green));
      out.push_back(static_cast<char>(c.blue));
    }
  }
  return out;
}

}  // namespace detail

// Binary PPM (P6), one pixel per cell, row 1 at the top. Byte-identical
// output for identical inputs.
inline std::string render_matrix(const discovery_matrix& matrix,
                                 const color_map& map,
                                 std::optional<crop_region> crop = {}) {
  return detail::render_ppm(
      matrix.size(), [&](std::size_t r) { return matrix.row(r); }, map, crop);
}

// Same, for triangular data held as ragged rows (row r has r entries).
inline std::string render_triangular(const std::vector<std::vector<double>>& rows,
                                     const color_map& map,
                                     std::optional<crop_region> crop = {}) {
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != r + 1)
      throw std::domain_error("row " + std::to_string(r + 1) + " has " +
                              std::to_string(rows[r].size()) +
                              " entries, expected " + std::to_string(r + 1));
  if (rows.empty()) throw std::domain_error("nothing to render");
  return detail::render_ppm(
      rows.size(),
      [&](std::size_t r) { return std::span<const double>(rows[r - 1]); }, map,
      crop);
}

// One line per matrix row, comma-separated %.17g values, ragged lower
// triangle (nothing is written for cells j > r). Round-trips through
// parse_triangular_csv.
inline std::string export_csv(const discovery_matrix& matrix) {
  std::string out;
  for (std::size_t r = 1; r <= matrix.size(); ++r) {
    const auto row = matrix.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out += ',';
      out += format_value(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline std::string export_csv(const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out += ',';
      out += format_value(row[j]);
    }
    out += '\n';
  }
  return out;
}

// Parses ragged triangular CSV: line r must hold exactly r values.
inline std::vector<std::vector<double>> parse_triangular_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_number = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(begin, end - begin));
    begin = end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line, ',');
    if (fields.size() != rows.size() + 1)
      throw parse_error("row " + std::to_string(rows.size() + 1) + " needs " +
                            std::to_string(rows.size() + 1) + " values, got " +
                            std::to_string(fields.size()),
                        line_number, 1);
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (!detail::parse_double(fields[i], row[i]))
        throw parse_error("not a number: '" + fields[i] + "'", line_number,
                          i + 1);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error("no matrix rows found");
  return rows;
}

}  // namespace edisco
