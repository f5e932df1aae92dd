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

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>
#include <variant>

#include "pathwise/kernels.hpp"
#include "pathwise/linalg.hpp"
#include "pathwise/prior.hpp"
#include "pathwise/types.hpp"

namespace pathwise {

/// Observations y at locations X with i.i.d. Gaussian noise of variance
/// `noise_variance` (zero means noise-free conditioning).
struct Dataset {
  Locations X;
  Vector y;
  double noise_variance = 0.0;

  Index size() const { return X.rows(); }
  void validate(Index dim) const;
};

/// q(u) given directly by its moments.
struct InducingMoments {
  Vector mean;
  Matrix covariance;
};

/// q(u) induced by pseudo-observations with per-point pseudo-noise variances.
struct PseudoData {
  Vector targets;
  Vector noise_variances;
};

struct InducingModel {
  Locations Z;
  std::variant<InducingMoments, PseudoData> parameters;

  Index size() const { return Z.rows(); }
  void validate(Index dim) const;
};

struct DirectCholesky {};
struct ConjugateGradients {
  double tol = 1e-8;
  Index max_iter = 0;      // 0: 4 n
  Index precond_rank = 16; // 0 disables preconditioning
};
using SolverChoice = std::variant<DirectCholesky, ConjugateGradients>;

using CovarianceFunction = std::function<Matrix(const Locations&, const Locations&)>;
CovarianceFunction as_covariance(const Kernel& kernel);

/// The linear system (K(C, C) + diag(noise)) v = r at a fixed set of
/// centers C, prepared once and shared by every path updated against it.
class ConditioningSystem {
 public:
  ConditioningSystem(Kernel kernel, Locations centers, Vector center_noise,
                     SolverChoice solver = DirectCholesky{});
  /// Adopts an existing factor of K(C, C) + diag(noise).
  ConditioningSystem(Kernel kernel, Locations centers, Vector center_noise,
                     linalg::CholeskyFactor factor);

  ConditioningSystem(const ConditioningSystem&) = delete;
  ConditioningSystem& operator=(const ConditioningSystem&) = delete;

  const Kernel& kernel() const { return kernel_; }
  const Locations& centers() const { return centers_; }
  const Vector& center_noise() const { return center_noise_; }
  const SolverChoice& solver() const { return solver_; }
  Index size() const { return centers_.rows(); }

  /// Solves for update coefficients. CG non-convergence is reported in the
  /// returned report; non-finite solutions throw SolveFailure.
  std::pair<Vector, std::optional<linalg::CgReport>> solve(const Vector& rhs) const;
  /// One column per right-hand side. Reports are empty for the direct solver.
  std::pair<Matrix, std::vector<linalg::CgReport>> solve(const Matrix& rhs) const;

  /// The system with one more center, extended in O(n²) from the Cholesky
  /// factor (the factor is formed first when this system was solved by CG).
  std::shared_ptr<const ConditioningSystem> append(const Eigen::Ref<const Vector>& x,
                                                   double noise) const;

  /// Cholesky factor of the system matrix, formed on first use for CG systems.
  const linalg::CholeskyFactor& factor() const;

 private:
  Matrix system_matrix() const;
  void check_centers() const;

  Kernel kernel_;
  Locations centers_;
  Vector center_noise_;
  SolverChoice solver_;
  mutable std::once_flag factor_once_;
  mutable std::optional<linalg::CholeskyFactor> factor_;
  std::optional<Matrix> matrix_;  // cached for CG
  std::optional<linalg::LowRankPreconditioner> precond_;
};

/// Prior path plus a data-driven update in the canonical basis:
/// f(·) + k(·, C) v with v solving the conditioning system against
/// targets - f(C) - noise_draws. Immutable once built; evaluation never
/// consumes randomness.
class PosteriorPath {
 public:
  /// A path with no update yet (zero centers).
  static PosteriorPath from_prior(PriorPath prior, const Kernel& kernel);

  PosteriorPath(PriorPath prior, std::shared_ptr<const ConditioningSystem> system, Vector targets,
                Vector noise_draws, Vector coefficients,
                std::optional<linalg::CgReport> report = std::nullopt);

  Vector evaluate(const Locations& X) const;
  /// Only the update term k(X, C) v.
  Vector evaluate_update(const Locations& X) const;
  Vector gradient(const Eigen::Ref<const Vector>& x) const;

  const PriorPath& prior() const { return prior_; }
  const std::shared_ptr<const ConditioningSystem>& system() const { return system_; }
  const Kernel& kernel() const { return system_->kernel(); }
  const Locations& centers() const { return system_->centers(); }
  const Vector& targets() const { return targets_; }
  const Vector& noise_draws() const { return noise_draws_; }
  const Vector& coefficients() const { return coefficients_; }
  const std::optional<linalg::CgReport>& solve_report() const { return report_; }
  Index dim() const { return prior_.dim(); }

 private:
  PriorPath prior_;
  std::shared_ptr<const ConditioningSystem> system_;
  Vector targets_;
  Vector noise_draws_;
  Vector coefficients_;
  std::optional<linalg::CgReport> report_;
};

Vector eval_path(const PosteriorPath& path, const Locations& X);

/// Row s holds paths[s] at X. Paths sharing a conditioning system reuse one
/// cross-covariance matrix.
Matrix eval_paths(const std::vector<PosteriorPath>& paths, const Locations& X);

/// Generic pathwise update against a prepared system: targets and noise
/// draws are given explicitly.
PosteriorPath pathwise_update(const PriorPath& path,
                              const std::shared_ptr<const ConditioningSystem>& system,
                              const Vector& targets, const Vector& noise_draws);

/// Batched form; column s of targets and noise_draws belongs to paths[s].
std::vector<PosteriorPath> pathwise_update(const std::vector<PriorPath>& paths,
                                           const std::shared_ptr<const ConditioningSystem>& system,
                                           const Matrix& targets, const Matrix& noise_draws);

// ---------------------------------------------------------------------------
// Update rules

/// a + Σ_ab Σ_bb⁻¹ (β - b) for jointly Gaussian (a, b).
Vector matheron_finite(const Vector& a_sample, const Vector& b_sample, const Vector& beta,
                       const Matrix& cov_ab, const Matrix& cov_bb);

/// Noise-free update: v = K⁻¹ (y - f(X)). Requires noise_variance == 0 and
/// distinct training locations.
PosteriorPath canonical_update(const PriorPath& path, const Dataset& data,
                               const SolverChoice& solver = DirectCholesky{});
PosteriorPath canonical_update(const PriorPath& path, const Dataset& data,
                               const std::shared_ptr<const ConditioningSystem>& system);

/// Gaussian-likelihood update with an internal draw ε ~ N(0, σ² I).
PosteriorPath gaussian_update(const PriorPath& path, const Dataset& data,
                              const SolverChoice& solver, Rng& rng);
PosteriorPath gaussian_update(const PriorPath& path, const Dataset& data,
                              const std::shared_ptr<const ConditioningSystem>& system, Rng& rng);

/// Sparse update with u ~ N(μ_u, Σ_u) drawn internally: v = K_mm⁻¹ (u - f(Z)).
PosteriorPath sparse_update(const PriorPath& path, const InducingModel& inducing,
                            const SolverChoice& solver, Rng& rng);
PosteriorPath sparse_update(const PriorPath& path, const InducingModel& inducing,
                            const std::shared_ptr<const ConditioningSystem>& system, Rng& rng);

/// Pseudo-data update with ε̃ ~ N(0, Λ): v = (K_mm + Λ)⁻¹ (ỹ - f(Z) - ε̃).
PosteriorPath pseudo_data_update(const PriorPath& path, const InducingModel& inducing,
                                 const SolverChoice& solver, Rng& rng);
PosteriorPath pseudo_data_update(const PriorPath& path, const InducingModel& inducing,
                                 const std::shared_ptr<const ConditioningSystem>& system,
                                 Rng& rng);

/// Adds one observation to an existing posterior path. Noise-free additions
/// at an existing center are rejected.
PosteriorPath rank1_update(const PosteriorPath& post, const Eigen::Ref<const Vector>& new_point,
                           double new_value, double noise_variance, Rng& rng);
/// Same with the observation-noise draw supplied by the caller.
PosteriorPath rank1_update(const PosteriorPath& post, const Eigen::Ref<const Vector>& new_point,
                           double new_value, double noise_variance, double noise_draw);

// Batch forms: one prepared system and one shared draw root for many paths.
std::vector<PosteriorPath> canonical_update(const std::vector<PriorPath>& paths,
                                            const Dataset& data,
                                            const SolverChoice& solver = DirectCholesky{});
std::vector<PosteriorPath> gaussian_update(const std::vector<PriorPath>& paths,
                                           const Dataset& data, const SolverChoice& solver,
                                           Rng& rng);
std::vector<PosteriorPath> sparse_update(const std::vector<PriorPath>& paths,
                                         const InducingModel& inducing,
                                         const SolverChoice& solver, Rng& rng);
std::vector<PosteriorPath> pseudo_data_update(const std::vector<PriorPath>& paths,
                                              const InducingModel& inducing,
                                              const SolverChoice& solver, Rng& rng);
// Batch forms against a prepared system; required for tabulated priors.
std::vector<PosteriorPath> canonical_update(
    const std::vector<PriorPath>& paths, const Dataset& data,
    const std::shared_ptr<const ConditioningSystem>& system);
std::vector<PosteriorPath> gaussian_update(
    const std::vector<PriorPath>& paths, const Dataset& data,
    const std::shared_ptr<const ConditioningSystem>& system, Rng& rng);
std::vector<PosteriorPath> sparse_update(
    const std::vector<PriorPath>& paths, const InducingModel& inducing,
    const std::shared_ptr<const ConditioningSystem>& system, Rng& rng);
std::vector<PosteriorPath> pseudo_data_update(
    const std::vector<PriorPath>& paths, const InducingModel& inducing,
    const std::shared_ptr<const ConditioningSystem>& system, Rng& rng);

/// Updates the weights of a weight-space path in its own basis:
/// w + Φᵀ (Φ Φᵀ + σ² I)⁻¹ (y - Φ w - ε). With `noise_rng` set and σ² > 0,
/// ε ~ N(0, σ² I) is drawn; otherwise ε = 0 and σ² acts as a regularizer.
PriorPath weight_space_update(const PriorPath& path, const Dataset& data, double regularizer,
                              Rng* noise_rng = nullptr);
/// Paths sharing a basis share one factorization.
std::vector<PriorPath> weight_space_update(const std::vector<PriorPath>& paths,
                                           const Dataset& data, double regularizer,
                                           Rng* noise_rng = nullptr);

// ---------------------------------------------------------------------------
// Distributional oracles

/// Exact moments of f(X*) | y for a centered GP prior with covariance `prior`.
GaussianMoments posterior_moments(const CovarianceFunction& prior, const Dataset& data,
                                  const Locations& X_star);
GaussianMoments posterior_moments(const Kernel& kernel, const Dataset& data,
                                  const Locations& X_star);

/// Moments of an approximate prior with covariance `prior` updated in the
/// canonical basis of `update_kernel`:
///   mean = ξᵀ y, cov = C** - C*ₙ ξ - ξᵀ Cₙ* + ξᵀ (Cₙₙ + σ² I) ξ,
/// with ξ = (Kₙₙ + σ² I)⁻¹ Kₙ*.
GaussianMoments decoupled_posterior_covariance(const CovarianceFunction& prior,
                                               const Kernel& update_kernel, const Dataset& data,
                                               const Locations& X_star);
/// Same for a weight-space prior, evaluated in factored form B Bᵀ + σ² ξᵀ ξ
/// with B = (Φ* - ξᵀ Φₙ) Σ_w^{1/2}, which stays PSD under cancellation.
GaussianMoments decoupled_posterior_covariance(const FeatureBasis& basis,
                                               const Kernel& update_kernel, const Dataset& data,
                                               const Locations& X_star);

/// Moments of u under the pseudo-data parameterization:
/// μ_u = K (K + Λ)⁻¹ ỹ and Σ_u = K - K (K + Λ)⁻¹ K = (K⁻¹ + Λ⁻¹)⁻¹.
/// Moments of ∫ p(f_* | u) q(u) du at X_star for either parameterization.
GaussianMoments inducing_posterior_moments(const Kernel& kernel, const InducingModel& inducing,
                                           const Locations& X_star);

InducingMoments pseudo_data_moments(const Kernel& kernel, const Locations& Z,
                                    const PseudoData& pseudo);

}  // namespace pathwise
