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

#include <string>
#include <string_view>
#include <vector>

#include "pathwise/types.hpp"

namespace pathwise {

enum class KernelFamily {
  SquaredExponential,
  Matern12,
  Matern32,
  Matern52,
  KroneckerDelta,
};

std::string_view to_string(KernelFamily family);
/// Accepts the names produced by to_string plus the short forms
/// "se", "matern12", "matern32", "matern52", "delta".
KernelFamily parse_kernel_family(std::string_view name);

/// Plain serializable record of a kernel.
struct KernelConfig {
  KernelFamily family = KernelFamily::SquaredExponential;
  std::vector<double> lengthscales{1.0};
  double variance = 1.0;
};

/// Stationary covariance function with per-dimension lengthscales.
///
/// Inputs are pre-scaled by the lengthscales, so every family is
/// evaluated as a function of the scaled Euclidean distance
/// r = |(x - x') / l|. The Kronecker delta family compares coordinates
/// exactly and ignores the lengthscales.
class Kernel {
 public:
  Kernel(KernelFamily family, Vector lengthscales, double variance);
  /// Isotropic convenience constructor.
  Kernel(KernelFamily family, Index dim, double lengthscale, double variance);
  explicit Kernel(const KernelConfig& config);

  KernelFamily family() const { return family_; }
  const Vector& lengthscales() const { return lengthscales_; }
  double variance() const { return variance_; }
  Index dim() const { return lengthscales_.size(); }
  KernelConfig config() const;

  /// k(x, x') for two points.
  double operator()(const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& y) const;

  /// Cross-covariance matrix, entry (i, j) = k(x_i, y_j).
  Matrix eval(const Locations& X, const Locations& Y) const;
  Matrix eval(const Locations& X) const { return eval(X, X); }

  /// Gradient of k(x, z) with respect to x, for every row z of Z.
  /// Returns a d x m matrix whose column j is d/dx k(x, z_j).
  Matrix gradient(const Eigen::Ref<const Vector>& x, const Locations& Z) const;

  /// Covariance as a function of the scaled distance r.
  double profile(double r) const;
  /// Elementwise profile at squared scaled distances. Not defined for the
  /// Kronecker delta family.
  Eigen::ArrayXd profile_squared(const Eigen::ArrayXd& r2) const;

 private:
  void check_dim(Index cols, const char* what) const;

  KernelFamily family_;
  Vector lengthscales_;
  double variance_;
};

/// Spectral density and frequency sampler of a stationary kernel.
///
/// Fourier convention: k(x - x') = ∫ exp(2πi ωᵀ(x - x')) ρ(ω) dω, so the
/// density integrates to the kernel variance and sampled frequencies are
/// used in features of the form cos(2π ωᵀx + τ).
class SpectralSampler {
 public:
  /// Throws UnsupportedFamily for the Kronecker delta kernel.
  explicit SpectralSampler(Kernel kernel);

  const Kernel& kernel() const { return kernel_; }

  double density(const Eigen::Ref<const Vector>& omega) const;

  /// Draws `count` i.i.d. frequencies with density proportional to ρ.
  /// Returns a count x d matrix.
  Matrix sample(Index count, Rng& rng) const;

 private:
  Kernel kernel_;
  /// Smoothness ν of the Matérn families; 0 for squared exponential.
  double nu_ = 0.0;
};

/// True when the family has a spectral density (everything except delta).
bool has_spectral_density(KernelFamily family);

}  // namespace pathwise
