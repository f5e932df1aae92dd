// Copyright 2026 The pathwise Authors.
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

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace pathwise::bench {

using CsvCell = std::variant<std::string, double, std::int64_t>;

/// Writes `# schema=<name> version=<v> config_hash=<hex>` followed by a
/// header row. Floats use 9 significant digits.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& schema, int version, std::uint64_t config_hash,
            std::vector<std::string> columns);

  void row(const std::vector<CsvCell>& cells);

 private:
  std::ostream& out_;
  std::size_t width_;
};

std::string hex64(std::uint64_t value);

}  // namespace pathwise::bench
