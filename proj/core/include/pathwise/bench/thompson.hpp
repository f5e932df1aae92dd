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
#include <vector>

#include "pathwise/bench/config.hpp"
#include "pathwise/conditioning.hpp"

namespace pathwise::bench {

enum class ThompsonStrategy { Decoupled, WeightSpace, LocationScale, Random };

std::string to_string(ThompsonStrategy s);
ThompsonStrategy parse_thompson_strategy(const std::string& name);

struct ThompsonConfig {
  Index dim = 2;
  KernelConfig kernel;  // Matérn-5/2 with lengthscale sqrt(dim / 100) unless configured
  double noise_variance = 1e-3;
  Index batch = 2;            // κ
  Index rounds = 32;
  Index replicates = 8;
  Index features = 1024;      // ℓ for decoupled; weight-space uses ℓ + n
  Index pool = 8192;          // random discretization scored by marginal draws
  Index ls_candidates = 2048; // joint location-scale candidates
  Index ms_starts = 32;       // multistart gradient descent starts
  Index ms_steps = 100;
  double ms_step = 0.1;       // in units of the mean lengthscale
  std::vector<ThompsonStrategy> strategies{ThompsonStrategy::Decoupled,
                                           ThompsonStrategy::WeightSpace,
                                           ThompsonStrategy::LocationScale,
                                           ThompsonStrategy::Random};
  bool record_wall_time = true;
  std::uint64_t seed = 0;

  ThompsonConfig();
  static ThompsonConfig from(const KeyValueConfig& cfg);
  void validate() const;
  ConfigDigest digest() const;
};

struct ThompsonRow {
  ThompsonStrategy strategy = ThompsonStrategy::Random;
  Index replicate = 0;
  Index round = 0;
  double best_value = 0.0;  // smallest noise-free value queried so far
  double wall_time = 0.0;   // seconds spent choosing this round's queries
  Index fallbacks = 0;      // optimizer runs that fell back to their best start
};

std::vector<ThompsonRow> run_thompson(const ThompsonConfig& config);

/// Median over replicates of best_value at the given round.
double median_best_value(const std::vector<ThompsonRow>& rows, ThompsonStrategy strategy,
                         Index round);

void write_thompson_csv(std::ostream& out, const ThompsonConfig& config,
                        const std::vector<ThompsonRow>& rows);

/// Projected gradient descent on a path over [0,1]^d from x0. Each step
/// moves a fixed distance along the negative gradient, halving on failure
/// to decrease. Returns false if the path produced a non-finite value.
struct DescentResult {
  Vector x;
  double value = 0.0;
  bool finite = true;
};
DescentResult minimize_path(const PosteriorPath& path, const Vector& x0, Index steps, double step);

}  // namespace pathwise::bench
