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

#include "pathwise/bench/csv.hpp"

#include <cstdio>

#include "pathwise/bench/config.hpp"
#include "pathwise/types.hpp"

namespace pathwise::bench {

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::string& schema, int version,
                     std::uint64_t config_hash, std::vector<std::string> columns)
    : out_(out), width_(columns.size()) {
  out_ << "# schema=" << schema << " version=" << version << " config_hash=" << hex64(config_hash)
       << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != width_) throw InvalidArgument("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    if (const auto* s = std::get_if<std::string>(&cells[i]))
      out_ << *s;
    else if (const auto* d = std::get_if<double>(&cells[i]))
      out_ << format_double(*d);
    else
      out_ << std::get<std::int64_t>(cells[i]);
  }
  out_ << '\n';
}

}  // namespace pathwise::bench
