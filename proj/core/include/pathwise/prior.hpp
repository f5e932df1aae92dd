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
#include <unordered_map>
#include <variant>
#include <vector>

#include "pathwise/kernels.hpp"
#include "pathwise/linalg.hpp"
#include "pathwise/types.hpp"

namespace pathwise {

/// A finite set of basis functions φ = (φ_1, ..., φ_ℓ) on R^d.
class FeatureBasis {
 public:
  virtual ~FeatureBasis() = default;

  virtual Index dim() const = 0;
  virtual Index size() const = 0;

  /// Feature matrix Φ with one row per location (m x ℓ).
  virtual Matrix features(const Locations& X) const = 0;

  /// Jacobian of φ at x (ℓ x d). Bases without derivatives throw.
  virtual Matrix jacobian(const Eigen::Ref<const Vector>& x) const;

  /// Prior variances of the weights (all ones for random features).
  virtual Vector weight_variances() const { return Vector::Ones(size()); }

  /// Covariance of the weight-space model, Φ(X) Σ_w Φ(Y)ᵀ.
  Matrix induced_covariance(const Locations& X, const Locations& Y) const;
};

/// Random Fourier features φ_j(x) = a cos(2π ω_jᵀ x + τ_j), a = sqrt(2σ²/ℓ).
class FourierFeatureMap final : public FeatureBasis {
 public:
  FourierFeatureMap(Kernel kernel, Matrix frequencies, Vector phases);

  Index dim() const override { return frequencies_.cols(); }
  Index size() const override { return frequencies_.rows(); }
  Matrix features(const Locations& X) const override;
  Matrix jacobian(const Eigen::Ref<const Vector>& x) const override;

  const Kernel& kernel() const { return kernel_; }
  const Matrix& frequencies() const { return frequencies_; }
  const Vector& phases() const { return phases_; }
  double amplitude() const { return amplitude_; }

 private:
  Kernel kernel_;
  Matrix frequencies_;   // ℓ x d
  Matrix two_pi_freq_;   // 2π Ω, cached
  Vector phases_;        // ℓ
  double amplitude_;
};

/// Truncated Karhunen–Loève basis with caller-supplied eigenpairs.
class KlBasis final : public FeatureBasis {
 public:
  using Eigenfunction = std::function<double(const Eigen::Ref<const Vector>&)>;

  /// Eigenvalues must be positive and sorted nonincreasing.
  KlBasis(Index dim, std::vector<Eigenfunction> eigenfunctions, Vector eigenvalues);

  Index dim() const override { return dim_; }
  Index size() const override { return eigenvalues_.size(); }
  Matrix features(const Locations& X) const override;
  Vector weight_variances() const override { return eigenvalues_; }

  const Vector& eigenvalues() const { return eigenvalues_; }

  /// The same basis cut down to its leading `count` eigenpairs.
  std::shared_ptr<const KlBasis> truncated(Index count) const;

 private:
  Index dim_;
  std::vector<Eigenfunction> eigenfunctions_;
  Vector eigenvalues_;
};

/// Exact-coordinate index over a fixed point set.
class TabulatedSupport {
 public:
  explicit TabulatedSupport(Locations points);

  const Locations& points() const { return points_; }
  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  /// Row of the support equal to x, or -1.
  Index find(const Eigen::Ref<const Vector>& x) const;

 private:
  struct Hash {
    std::size_t operator()(const std::vector<double>& key) const noexcept;
  };
  Locations points_;
  std::unordered_map<std::vector<double>, Index, Hash> index_;
};

using MeanFunction = std::function<double(const Eigen::Ref<const Vector>&)>;

/// A realized prior function.
///
/// Either a weight-space path φ(·)ᵀw over a shared basis, or a tabulated
/// exact draw known only on a finite support (evaluation elsewhere throws).
class PriorPath {
 public:
  static PriorPath weight_space(std::shared_ptr<const FeatureBasis> basis, Vector weights);
  static PriorPath tabulated(std::shared_ptr<const TabulatedSupport> support, Vector values);

  Index dim() const;
  bool is_weight_space() const { return std::holds_alternative<WeightSpace>(repr_); }

  Vector evaluate(const Locations& X) const;
  /// Gradient at x; weight-space paths over differentiable bases only.
  Vector gradient(const Eigen::Ref<const Vector>& x) const;

  /// Basis and weights of a weight-space path (throws otherwise).
  const std::shared_ptr<const FeatureBasis>& basis() const;
  const Vector& weights() const;
  /// Support and values of a tabulated path (throws otherwise).
  const std::shared_ptr<const TabulatedSupport>& support() const;
  const Vector& values() const;

  /// Adds a deterministic mean at evaluation time.
  PriorPath with_mean(MeanFunction mean) const;
  bool has_mean() const { return static_cast<bool>(mean_); }

 private:
  struct WeightSpace {
    std::shared_ptr<const FeatureBasis> basis;
    Vector weights;
  };
  struct Tabulated {
    std::shared_ptr<const TabulatedSupport> support;
    Vector values;
  };
  explicit PriorPath(std::variant<WeightSpace, Tabulated> repr) : repr_(std::move(repr)) {}

  std::variant<WeightSpace, Tabulated> repr_;
  MeanFunction mean_;
};

// ---------------------------------------------------------------------------
// Exact finite-dimensional sampling

/// S i.i.d. draws of f(X) ~ N(0, K(X, X)), one draw per row (S x n).
Matrix sample_exact(const Kernel& kernel, const Locations& X, Index count, Rng& rng);

/// Wraps the rows of `draws` (S x n) as tabulated paths sharing one support.
std::vector<PriorPath> tabulate(const Locations& X, const Matrix& draws);

/// Moments of f(X_new) given noise-free values f(X_done) = f_done.
GaussianMoments exact_conditional_moments(const Kernel& kernel, const Locations& X_done,
                                          const Vector& f_done, const Locations& X_new);

/// One draw of f(X_new) given f(X_done) = f_done. Points of X_new that
/// coincide exactly with X_done return the conditioned value.
Vector sample_exact_conditional(const Kernel& kernel, const Locations& X_done,
                                const Vector& f_done, const Locations& X_new, Rng& rng);

/// Lazily materialized exact draw of a (multi-output) GP prior.
///
/// Every queried point is drawn from its exact conditional given all
/// previously materialized points, through an incrementally extended
/// Cholesky factor, so a query costs O(n²) in the number of stored points.
/// `channels` independent outputs share the kernel and therefore the factor.
/// A small relative nugget on stored points keeps the factor well posed when
/// queries cluster.
class SequentialSampler {
 public:
  SequentialSampler(Kernel kernel, Index channels = 1, double nugget = 1e-8);

  const Kernel& kernel() const { return kernel_; }
  Index channels() const { return channels_; }
  Index size() const { return size_; }
  void reserve(Index capacity);

  /// Records known values (n x channels) at X as materialized points.
  void condition(const Locations& X, const Matrix& values);
  /// Draws values at X (n x channels), materializing each point in turn.
  Matrix sample(const Locations& X, Rng& rng);
  /// Single-point query; returns one value per channel. A point equal to a
  /// materialized one returns the stored values.
  Vector sample_point(const Eigen::Ref<const Vector>& x, Rng& rng);

  Locations points() const { return points_.topRows(size_); }
  Matrix values() const { return values_.topRows(size_); }

 private:
  Vector append(const Eigen::Ref<const Vector>& x, const Vector* known, Rng* rng);

  Kernel kernel_;
  Index channels_;
  double nugget_;
  Index size_ = 0;
  Matrix L_;        // capacity x capacity, lower factor of K + nugget I in the top-left block
  Matrix alpha_;    // capacity x channels, L⁻¹ values
  Locations points_;
  Matrix values_;
};

// ---------------------------------------------------------------------------
// Approximate priors

/// ℓ random Fourier features for a kernel with a spectral density.
std::shared_ptr<const FourierFeatureMap> build_rff_basis(const Kernel& kernel, Index num_features,
                                                         Rng& rng);

/// S independent weight vectors w ~ N(0, diag(weight_variances)) over one basis.
std::vector<PriorPath> sample_prior_path(const std::shared_ptr<const FeatureBasis>& basis,
                                         Index count, Rng& rng);

/// One draw of a truncated Karhunen–Loève expansion.
PriorPath build_kl_path(const std::shared_ptr<const KlBasis>& basis, Rng& rng);

Vector eval_path(const PriorPath& path, const Locations& X);

/// Row s holds paths[s] at X. Paths sharing a basis or support reuse one
/// feature matrix or lookup table.
Matrix eval_paths(const std::vector<PriorPath>& paths, const Locations& X);

}  // namespace pathwise
