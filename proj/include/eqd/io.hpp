#pragma once

// Reading one-column numeric input and writing reports as CSV or JSON.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "eqd/errors.hpp"
#include "eqd/grid.hpp"

namespace eqd::io {

/// One number per line. A non-numeric first line is taken as a header; blank
/// lines are skipped; anything else non-numeric is an error.
inline std::vector<double> read_values(std::istream& in, std::string_view source = "input") {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    const auto v = detail::parse_number(s);
    if (!v) {
      if (!seen_content) {
        seen_content = true;
        continue;
      }
      throw InputError(std::string(source) + ":" + std::to_string(line_no) + ": not a number: '" +
                       std::string(s) + "'");
    }
    seen_content = true;
    out.push_back(*v);
  }
  if (out.empty()) throw InputError(std::string(source) + ": no numeric values");
  return out;
}

/// Reads from a file, or from standard input when `path` is "-".
inline std::vector<double> read_values(const std::string& path) {
  if (path == "-") return read_values(std::cin, "<stdin>");
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  return read_values(f, path);
}

using Value = std::variant<double, std::int64_t, std::string>;

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_value(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  const auto& s = std::get<std::string>(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline void write_values(std::ostream& out, const std::vector<double>& values,
                         std::string_view header = "value") {
  out << header << '\n';
  for (double v : values) out << format_number(v) << '\n';
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  Table(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}
  void add(std::vector<Value> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match table " + name);
    rows.push_back(std::move(row));
  }
};

enum class Format { csv, json };

inline Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw InputError("unknown output format '" + std::string(s) + "'");
}

/// Scalar summary fields plus named tables.
struct Report {
  std::vector<std::pair<std::string, Value>> summary;
  std::vector<Table> tables;
  std::vector<std::string> warnings;

  void set(std::string key, Value v) { summary.emplace_back(std::move(key), std::move(v)); }
  Table& table(std::string name, std::vector<std::string> cols) {
    tables.emplace_back(std::move(name), std::move(cols));
    return tables.back();
  }
};

inline void write_table_csv(std::ostream& out, const Table& t) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_value(row[c]);
    out << '\n';
  }
}

/// CSV output. A report with only one table and no summary is a plain CSV
/// file; otherwise each block starts with a "# name" line and blocks are
/// separated by blank lines.
inline void write_csv(std::ostream& out, const Report& r) {
  const bool plain = r.summary.empty() && r.tables.size() == 1;
  if (plain) {
    write_table_csv(out, r.tables.front());
    return;
  }
  bool first = true;
  if (!r.summary.empty()) {
    out << "# summary\nkey,value\n";
    for (const auto& [k, v] : r.summary) out << k << ',' << format_value(v) << '\n';
    first = false;
  }
  for (const auto& t : r.tables) {
    if (!first) out << '\n';
    first = false;
    out << "# " << t.name << '\n';
    write_table_csv(out, t);
  }
}

inline nlohmann::ordered_json to_json(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    if (!std::isfinite(*d)) return nullptr;
    return *d;
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

inline void write_json(std::ostream& out, const Report& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.summary) j[k] = to_json(v);
  for (const auto& t : r.tables) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json o = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < row.size(); ++c) o[t.columns[c]] = to_json(row[c]);
      arr.push_back(std::move(o));
    }
    j[t.name] = std::move(arr);
  }
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  out << j.dump(2) << '\n';
}

inline void write_report(std::ostream& out, const Report& r, Format f) {
  if (f == Format::csv) write_csv(out, r);
  else write_json(out, r);
}

}  // namespace eqd::io
