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
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "pathwise/types.hpp"

namespace pathwise::linalg {

/// Lower Cholesky factor of A + jitter * I.
struct CholeskyFactor {
  Matrix L;
  double jitter_used = 0.0;

  Index size() const { return L.rows(); }
};

/// Relative jitter multipliers tried in order; each is scaled by the mean
/// diagonal of the input.
inline constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

/// Factors A, escalating through kJitterLadder. `max_jitter` caps the relative
/// multiplier; rungs above it are not attempted. Throws NotPositiveDefinite
/// naming the last rung tried.
CholeskyFactor cholesky(const Matrix& A, double max_jitter = 1e-6);

/// Solves (L Lᵀ) X = B.
Matrix solve_psd(const CholeskyFactor& factor, const Matrix& B);
Vector solve_psd(const CholeskyFactor& factor, const Vector& b);

/// Appends one row/column to a factor: given the factor of A, returns the
/// factor of [[A, c], [cᵀ, d]] in O(n²). Throws NotPositiveDefinite when
/// the new Schur complement is not positive.
CholeskyFactor cholesky_append(const CholeskyFactor& factor, const Vector& cross, double diag);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues down to
/// -1e-8 * ||A|| are clamped to zero.
Matrix psd_sqrt(const Matrix& A);

/// Partial pivoted Cholesky: A ≈ R Rᵀ with R of shape n x rank.
struct LowRankFactor {
  Matrix R;
  std::vector<Index> pivots;
  /// trace(A - R Rᵀ) after each rank increment (size == rank).
  std::vector<double> trace_residuals;
};

LowRankFactor pivoted_cholesky(const Matrix& A, Index rank);

/// Applies (R Rᵀ + D)⁻¹ through the Woodbury identity, with D diagonal and
/// strictly positive. Built once, applied to many right-hand sides.
class LowRankPreconditioner {
 public:
  LowRankPreconditioner(LowRankFactor factor, Vector diag);
  LowRankPreconditioner(LowRankFactor factor, double noise);

  Vector apply(const Vector& r) const;
  Index size() const { return diag_.size(); }

 private:
  LowRankFactor factor_;
  Vector diag_;
  Matrix DinvR_;                       // D⁻¹ R
  Eigen::LLT<Matrix> capacitance_;     // I + Rᵀ D⁻¹ R
};

struct CgReport {
  Index iterations = 0;
  double final_residual_norm = 0.0;  // relative: ||A v - b|| / ||b||
  bool converged = false;
};

struct CgOptions {
  double tol = 1e-8;
  /// 0 selects the default of 4 n.
  Index max_iter = 0;
};

using LinearOperator = std::function<Vector(const Vector&)>;

/// Preconditioned conjugate gradients on a symmetric positive definite
/// operator. Stops when ||A v - b|| <= tol ||b||. Non-convergence is
/// reported, not thrown.
std::pair<Vector, CgReport> cg_solve(const LinearOperator& apply_A, const Vector& b,
                                     const LowRankPreconditioner* precond = nullptr,
                                     const CgOptions& options = {});

/// Solves against every column of B, sharing one preconditioner.
std::pair<Matrix, std::vector<CgReport>> cg_solve(const LinearOperator& apply_A,
                                                  const Matrix& B,
                                                  const LowRankPreconditioner* precond,
                                                  const CgOptions& options = {});

}  // namespace pathwise::linalg
