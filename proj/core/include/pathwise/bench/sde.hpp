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
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "pathwise/bench/config.hpp"
#include "pathwise/conditioning.hpp"

namespace pathwise::bench {

using State = Eigen::Vector2d;  // (v, w)

struct FitzHughNagumo {
  double alpha = 0.75;
  double beta = 0.75;
  double gamma = 20.0;
};

/// (v - v³/3 - w + a, (v - βw + α)/γ) at x = (v, w).
State fitzhugh_nagumo_drift(const State& x, double a, const FitzHughNagumo& p = {});

/// The unique equilibrium under constant input a.
State fitzhugh_nagumo_equilibrium(double a, const FitzHughNagumo& p = {});

struct SdeConfig {
  double tau = 0.25;
  Index horizon = 1000;                                    // T
  Matrix diffusion = 1e-4 * Matrix::Identity(2, 2);        // Σ_ε
  std::function<double(double time)> control = [](double) { return 0.5; };
  State initial_mean = fitzhugh_nagumo_equilibrium(0.0);
  Matrix initial_covariance = Matrix::Zero(2, 2);
  Index trajectories = 1000;

  void validate() const;
};

using DriftFunction = std::function<State(const State& state, double a)>;
/// Produces the drift of one trajectory; pathwise and exact GP drifts
/// draw a fresh function here.
using DriftFactory = std::function<DriftFunction(Index trajectory, Rng& rng)>;

struct TrajectorySet {
  std::vector<Matrix> paths;     // one (T+1) x 2 matrix per trajectory
  std::vector<bool> truncated;   // overflowed; rows after the failure are NaN

  Index size() const { return static_cast<Index>(paths.size()); }
  /// Finite states at step t, one row per surviving trajectory.
  Matrix states_at(Index t) const;
  Index truncated_count() const;
};

/// Euler–Maruyama: x_{t+1} = x_t + τ f(x_t, a_t) + √τ ε_t. Trajectory i uses
/// streams derived from (seed, i) for its drift draw and its noise.
TrajectorySet simulate_sde(const DriftFactory& drift, const SdeConfig& cfg, std::uint64_t seed);
TrajectorySet simulate_sde(const DriftFunction& drift, const SdeConfig& cfg, std::uint64_t seed);

/// Sparse GP model of the two drift components over (v, w, a). Output o is
/// scale[o] times a unit-variance GP conditioned on pseudo-data targets[o] /
/// scale[o] at Z with pseudo-noise variance `relative_noise`.
struct SdeModelConfig {
  Index n_train = 256;
  Index inducing = 32;
  KernelConfig kernel{KernelFamily::Matern52, {1.0, 1.0, 1.0}, 1.0};
  Vector output_scale = (Vector(2) << 2.0, 0.1).finished();
  double train_noise = 1e-4;
  double relative_noise = 1e-3;
  Index features = 256;
  Vector box_low = (Vector(3) << -2.5, -1.0, 0.0).finished();
  Vector box_high = (Vector(3) << 2.5, 2.0, 1.0).finished();
};

struct SdeModel {
  Kernel kernel;  // unit variance
  Locations Z;
  Matrix targets;  // m x 2, already divided by output_scale
  Vector output_scale;
  PseudoData pseudo[2];
  std::shared_ptr<const ConditioningSystem> system;
  Index features = 0;
};

SdeModel fit_sde_model(const SdeModelConfig& cfg, Rng& rng);

/// RFF prior plus pseudo-data update per trajectory; O(ℓ + m) per step.
DriftFactory pathwise_drift(const SdeModel& model);
/// Exact draw u ~ q(u), then exact conditionals at every visited state.
DriftFactory exact_drift(const SdeModel& model, Index horizon);

enum class SdeMode { GroundTruth, Pathwise, Exact, ExactReference };
std::string to_string(SdeMode m);
SdeMode parse_sde_mode(const std::string& name);

struct SdeExperimentConfig {
  SdeConfig sde;
  SdeModelConfig model;
  double control = 0.5;
  std::vector<SdeMode> modes{SdeMode::GroundTruth, SdeMode::Pathwise, SdeMode::Exact,
                             SdeMode::ExactReference};
  std::vector<Index> record_steps{250, 500, 1000};
  double sinkhorn_reg = 1e-2;
  Index sinkhorn_max_iter = 10000;
  double sinkhorn_tol = 1e-4;
  bool record_wall_time = true;
  std::uint64_t seed = 0;

  static SdeExperimentConfig from(const KeyValueConfig& cfg);
  void validate() const;
  ConfigDigest digest() const;
};

struct SdeModeResult {
  SdeMode mode;
  TrajectorySet trajectories;
  double wall_time = 0.0;
};

struct SdeDistance {
  SdeMode a, b;
  Index step = 0;
  double distance = 0.0;
  bool converged = true;
};

struct SdeResult {
  std::vector<SdeModeResult> modes;
  std::vector<SdeDistance> distances;

  const SdeModeResult& mode(SdeMode m) const;
  double distance(SdeMode a, SdeMode b, Index step) const;
};

SdeResult run_sde(const SdeExperimentConfig& config);

void write_sde_csv(std::ostream& out, const SdeExperimentConfig& config, const SdeResult& result);

}  // namespace pathwise::bench
