/*
 * Copyright 2026 The gatekit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef GATEKIT_CSV_HPP_
#define GATEKIT_CSV_HPP_

#include <optional>
#include <string>
#include <vector>

namespace gatekit {

// Decimal serialization at 17 significant digits; round-trips any double.
std::string format_g17(double v);

// Empty string for a missing value.
std::string format_optional(const std::optional<double>& v);

// Minimal comma-separated table, no quoting (all payloads here are numeric
// or simple identifiers). Leading '#' lines are collected as comments.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace gatekit

#endif  // GATEKIT_CSV_HPP_
