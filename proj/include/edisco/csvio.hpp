#pragma once
// Minimal CSV plumbing shared by the loaders, exporters, and the CLI: field
// splitting, strict double parsing, and the one-value-per-line column format
// used for vectors of e-values and p-values.

#include <cstdio>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "evalues.hpp"

namespace edisco {

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line,
                                             char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == delimiter) {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

// Whole-field double parse after trimming blanks; accepts "inf"/"-inf".
inline bool parse_double(const std::string& text, double& out) {
  const std::size_t begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return false;
  const std::size_t end = text.find_last_not_of(" \t") + 1;
  const std::string trimmed = text.substr(begin, end - begin);
  try {
    std::size_t used = 0;
    out = std::stod(trimmed, &used);
    return used == trimmed.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

// Shortest representation that round-trips a double; +infinity prints "inf".
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One value per nonempty line; extra comma-separated fields after the first
// are ignored, so observation files with a label column also work.
inline std::vector<double> parse_value_column(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    const std::string field =
        comma == std::string::npos ? line : line.substr(0, comma);
    double v;
    if (!detail::parse_double(field, v))
      throw parse_error("not a number: '" + field + "'", line_number, 1);
    values.push_back(v);
  }
  return values;
}

inline std::string format_value_column(std::span<const double> values) {
  std::string out;
  for (double v : values) {
    out += format_value(v);
    out += '\n';
  }
  return out;
}

}  // namespace edisco
