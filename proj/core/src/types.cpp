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

#include "pathwise/types.hpp"

namespace pathwise {

Rng split_stream(std::uint64_t root_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed),
                    static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t stream) {
  Rng rng = split_stream(root_seed, stream);
  return rng();
}

Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector z(n);
  for (Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix z(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
  return z;
}

}  // namespace pathwise
