#pragma once

#include "penreg/error.hpp"
#include "penreg/model/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace penreg::csv {

/// Splits one CSV record. Quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(field));
  return out;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote(fields[i]);
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // source line of each row
};

inline Table parse(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_record(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                                      " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) fail(ErrorKind::ParseError, "line 1: missing header row");
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  return parse(in);
}

inline double parse_double(std::string_view s, std::size_t line_no, std::string_view column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": column " + std::string(column) +
                                    " is not numeric: '" + std::string(s) + "'");
  }
  return v;
}

enum class OutcomeType { continuous, binary };

inline std::string to_string(OutcomeType t) { return t == OutcomeType::continuous ? "continuous" : "binary"; }

/// Numeric CSV with a named outcome column; all other columns are predictors.
/// Binary outcomes must be coded 0/1.
inline Dataset read_dataset(const Table& t, const std::string& outcome, OutcomeType type) {
  std::size_t y_col = t.header.size();
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == outcome) y_col = j;
  if (y_col == t.header.size()) fail(ErrorKind::ParseError, "line 1: no outcome column named " + outcome);
  require(t.header.size() >= 2, ErrorKind::ParseError, "line 1: need at least one predictor column");
  Dataset d;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  d.x.resize(n, static_cast<Eigen::Index>(t.header.size()) - 1);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const std::size_t line_no = t.line_numbers[static_cast<std::size_t>(i)];
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double v = parse_double(row[j], line_no, t.header[j]);
      if (j == y_col) {
        if (type == OutcomeType::binary && v != 0.0 && v != 1.0) {
          fail(ErrorKind::OutcomeTypeMismatch,
               "line " + std::to_string(line_no) + ": binary outcome must be 0 or 1, got " + row[j]);
        }
        d.y[i] = v;
      } else {
        d.x(i, k++) = v;
      }
    }
  }
  return d;
}

}  // namespace penreg::csv
