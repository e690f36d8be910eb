/*
 * Copyright (c) 2026 benchmap contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "core/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace benchmap {

int CsvTable::column(const std::string& name, bool required) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  if (required) fail("E_CSV_COLUMN", "missing required column '" + name + "'");
  return -1;
}

bool CsvTable::has_column(const std::string& name) const { return column(name, false) >= 0; }

CsvTable CsvTable::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "E_IO", "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

CsvTable CsvTable::parse(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any_field = false;

  auto push_field = [&]() {
    record.push_back(field);
    field.clear();
    any_field = true;
  };
  auto push_record = [&]() {
    if (!any_field && record.empty()) return;  // skip blank lines
    push_field();
    if (t.header.empty()) {
      t.header = record;
    } else {
      require(record.size() == t.header.size(), "E_CSV_SHAPE",
              origin + ": row " + std::to_string(t.rows.size() + 2) + " has " +
                  std::to_string(record.size()) + " fields, expected " +
                  std::to_string(t.header.size()));
      t.rows.push_back(record);
    }
    record.clear();
    any_field = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      push_field();
    } else if (c == '\r') {
      // swallow; \n ends the record
    } else if (c == '\n') {
      push_record();
    } else {
      field += c;
    }
  }
  if (!field.empty() || any_field || !record.empty()) push_record();
  require(!t.header.empty(), "E_CSV_EMPTY", origin + ": empty file");
  return t;
}

namespace {

std::string escape_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += escape_field(header[i]);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += escape_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "E_IO", "cannot write file: " + path);
  out << to_string();
}

std::optional<double> parse_double_opt(const std::string& s, const std::string& context) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  require(ec == std::errc() && ptr == end, "E_PARSE_NUMBER",
          context + ": not a number: '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& context) {
  auto v = parse_double_opt(s, context);
  require(v.has_value(), "E_PARSE_NUMBER", context + ": empty numeric field");
  return *v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace benchmap
