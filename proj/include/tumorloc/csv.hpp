// Copyright 2026 The tumorloc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file csv.hpp
/// @brief Minimal CSV table: header row plus string cells. Fields containing a
/// comma, quote or newline are quoted RFC 4180 style.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tumorloc {

class CsvTable {
 public:
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static CsvTable Parse(std::string_view text);
  static CsvTable Read(const std::filesystem::path& path);
  std::string Serialize() const;

  /// Column index by name; ParseError if missing.
  std::size_t Column(std::string_view name) const;
  std::optional<std::size_t> FindColumn(std::string_view name) const;
};

double ParseDouble(std::string_view text);
long long ParseInt(std::string_view text);
/// Shortest decimal that round-trips the double.
std::string FormatDouble(double value);

}  // namespace tumorloc
