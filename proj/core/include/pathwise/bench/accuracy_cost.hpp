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
#include "pathwise/kernels.hpp"

namespace pathwise::bench {

enum class PriorKind { Exact, Rff };
enum class UpdateKind { Canonical, Gaussian, CgGaussian, Sparse, PseudoData, WeightSpace, LocationScale };

struct SamplerVariant {
  PriorKind prior = PriorKind::Rff;
  UpdateKind update = UpdateKind::Gaussian;

  /// "exact+gaussian", "rff+weight-space", "location-scale", ...
  std::string name() const;
  static SamplerVariant parse(const std::string& text);
};

struct AccuracyCostConfig {
  Index dim = 1;
  KernelConfig kernel{KernelFamily::SquaredExponential, {0.1}, 1.0};
  double noise_variance = 1e-3;
  std::vector<Index> n_train{16, 64, 256};
  std::vector<Index> n_test{1024};
  Index features = 1024;
  Index inducing = 32;
  std::vector<SamplerVariant> variants;
  Index samples = 4096;
  Index repeats = 3;
  Index chunk = 512;
  double cg_tol = 1e-8;
  Index cg_precond_rank = 32;
  bool grade = true;
  bool record_wall_time = true;
  std::uint64_t seed = 0;

  static AccuracyCostConfig from(const KeyValueConfig& cfg);
  void validate() const;
  ConfigDigest digest() const;
};

struct AccuracyCostRow {
  std::string variant;
  Index n = 0;
  Index n_test = 0;
  Index repeats = 0;
  double time_cached = 0.0;    // seconds, median over repeats
  double time_uncached = 0.0;  // seconds, median over repeats
  double w2 = 0.0;             // median W2 of the empirical moments to the true posterior
  double w2_floor = 0.0;       // same for an independent exact batch
  std::string status = "ok";
};

std::vector<AccuracyCostRow> run_accuracy_cost(const AccuracyCostConfig& config);

void write_accuracy_cost_csv(std::ostream& out, const AccuracyCostConfig& config,
                             const std::vector<AccuracyCostRow>& rows);

}  // namespace pathwise::bench
