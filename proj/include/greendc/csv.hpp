#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "greendc/errors.hpp"

namespace greendc {

// Minimal CSV support for the simulator's flat tables. No quoting or
// escapes: none of the file formats need them, and rejecting surprising
// input loudly beats guessing.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // data rows, header excluded
  // 1-based file row of rows[i], for error reporting past blank lines.
  std::vector<std::size_t> row_numbers;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto fields = detail::split_csv_line(s);
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size())
        throw ParseError(path + ": expected " + std::to_string(t.header.size()) +
                             " fields, got " + std::to_string(fields.size()),
                         lineno);
      t.rows.push_back(std::move(fields));
      t.row_numbers.push_back(lineno);
    }
  }
  if (t.header.empty()) throw ParseError(path + ": empty file", lineno == 0 ? 1 : lineno);
  return t;
}

// Header check by exact name sequence; order matters for these formats.
inline void require_header(const CsvTable& t, const std::vector<std::string>& names,
                           const std::string& path) {
  if (t.header != names) {
    std::ostringstream os;
    os << path << ": bad header, expected ";
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
    throw ParseError(os.str(), 1);
  }
}

inline double parse_double(const std::string& s, const std::string& what, std::size_t row) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number for " + what + ": '" + s + "'", row);
  }
}

inline long parse_long(const std::string& s, const std::string& what, std::size_t row) {
  try {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad integer for " + what + ": '" + s + "'", row);
  }
}

}  // namespace greendc
