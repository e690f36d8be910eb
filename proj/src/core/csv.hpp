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

#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace benchmap {

// Minimal RFC-4180-ish table: header row required, UTF-8, "." decimal,
// double quotes only when a field contains comma/quote/newline.
class CsvTable {
public:
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return header.size(); }

  /// Column index by name; fails with E_CSV_COLUMN when required and absent.
  int column(const std::string& name, bool required = true) const;
  bool has_column(const std::string& name) const;

  const std::string& cell(std::size_t row, int col) const { return rows[row][col]; }

  static CsvTable read_file(const std::string& path);
  static CsvTable parse(const std::string& text, const std::string& origin);

  void write_file(const std::string& path) const;
  std::string to_string() const;
};

/// Strict double parse; empty string is "missing" (nullopt), junk fails.
std::optional<double> parse_double_opt(const std::string& s, const std::string& context);
double parse_double(const std::string& s, const std::string& context);

/// Shortest round-trip formatting for doubles (deterministic output files).
std::string format_double(double v);

}  // namespace benchmap
