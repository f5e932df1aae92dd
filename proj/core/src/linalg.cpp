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

#include "pathwise/linalg.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace pathwise::linalg {

namespace {

void require_square(const Matrix& A, const char* who) {
  if (A.rows() != A.cols())
    throw InvalidArgument(std::string(who) + ": matrix must be square");
}

void require_symmetric(const Matrix& A, const char* who) {
  require_square(A, who);
  const double scale = A.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream msg;
    msg << who << ": matrix is not symmetric (relative asymmetry " << asym / scale << ")";
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

CholeskyFactor cholesky(const Matrix& A, double max_jitter) {
  require_symmetric(A, "cholesky");
  if (max_jitter < 0.0) throw InvalidArgument("cholesky: max_jitter must be nonnegative");
  const Index n = A.rows();
  if (n == 0) return {Matrix(0, 0), 0.0};
  const double mean_diag = A.diagonal().mean();

  double last = 0.0;
  for (double rung : kJitterLadder) {
    if (rung > max_jitter) break;
    last = rung;
    const double jitter = rung * std::abs(mean_diag);
    Matrix shifted = A;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Matrix L = llt.matrixL();
      if ((L.diagonal().array() > 0.0).all()) return {std::move(L), jitter};
    }
  }
  std::ostringstream msg;
  msg << "cholesky: matrix of order " << n
      << " is not positive definite at jitter ladder step " << last << " x mean diagonal";
  throw NotPositiveDefinite(msg.str());
}

Matrix solve_psd(const CholeskyFactor& factor, const Matrix& B) {
  if (B.rows() != factor.size())
    throw InvalidArgument("solve_psd: right-hand side has " + std::to_string(B.rows()) +
                          " rows, factor has order " + std::to_string(factor.size()));
  Matrix X = factor.L.triangularView<Eigen::Lower>().solve(B);
  factor.L.triangularView<Eigen::Lower>().transpose().solveInPlace(X);
  return X;
}

Vector solve_psd(const CholeskyFactor& factor, const Vector& b) {
  return solve_psd(factor, Matrix(b)).col(0);
}

CholeskyFactor cholesky_append(const CholeskyFactor& factor, const Vector& cross, double diag) {
  const Index n = factor.size();
  if (cross.size() != n) throw InvalidArgument("cholesky_append: cross-covariance size mismatch");
  Vector l = cross;
  if (n > 0) factor.L.triangularView<Eigen::Lower>().solveInPlace(l);
  const double schur = diag + factor.jitter_used - l.squaredNorm();
  if (!(schur > 0.0))
    throw NotPositiveDefinite("cholesky_append: Schur complement " + std::to_string(schur) +
                              " is not positive");
  CholeskyFactor out;
  out.jitter_used = factor.jitter_used;
  out.L = Matrix::Zero(n + 1, n + 1);
  out.L.topLeftCorner(n, n) = factor.L;
  out.L.block(n, 0, 1, n) = l.transpose();
  out.L(n, n) = std::sqrt(schur);
  return out;
}

Matrix psd_sqrt(const Matrix& A) {
  require_symmetric(A, "psd_sqrt");
  const Index n = A.rows();
  if (n == 0) return Matrix(0, 0);
  const Matrix sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NotPositiveDefinite("psd_sqrt: eigendecomposition failed");
  const double norm = sym.norm();
  Vector lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-8 * norm) {
    std::ostringstream msg;
    msg << "psd_sqrt: eigenvalue " << lambda.minCoeff() << " below tolerance for norm " << norm;
    throw NotPositiveDefinite(msg.str());
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  const Matrix& V = eig.eigenvectors();
  Matrix S = V * lambda.asDiagonal() * V.transpose();
  return 0.5 * (S + S.transpose());
}

LowRankFactor pivoted_cholesky(const Matrix& A, Index rank) {
  require_symmetric(A, "pivoted_cholesky");
  const Index n = A.rows();
  if (rank < 1 || rank > n)
    throw InvalidArgument("pivoted_cholesky: rank " + std::to_string(rank) +
                          " outside [1, " + std::to_string(n) + "]");
  LowRankFactor out;
  out.R = Matrix::Zero(n, rank);
  out.pivots.reserve(rank);
  out.trace_residuals.reserve(rank);
  Vector residual_diag = A.diagonal();

  for (Index k = 0; k < rank; ++k) {
    Index p = 0;
    const double pivot_value = residual_diag.maxCoeff(&p);
    out.pivots.push_back(p);
    if (pivot_value <= 0.0) {
      // Exhausted: the remaining columns stay zero.
      out.trace_residuals.push_back(std::max(0.0, residual_diag.sum()));
      continue;
    }
    const double root = std::sqrt(pivot_value);
    Vector col = A.col(p);
    if (k > 0) col.noalias() -= out.R.leftCols(k) * out.R.row(p).head(k).transpose();
    col /= root;
    // Already-chosen pivots are eliminated exactly.
    for (Index q : out.pivots) if (q != p) col(q) = 0.0;
    col(p) = root;
    out.R.col(k) = col;
    residual_diag -= col.cwiseAbs2();
    for (Index q : out.pivots) residual_diag(q) = 0.0;
    residual_diag = residual_diag.cwiseMax(0.0);
    out.trace_residuals.push_back(residual_diag.sum());
  }
  return out;
}

LowRankPreconditioner::LowRankPreconditioner(LowRankFactor factor, Vector diag)
    : factor_(std::move(factor)), diag_(std::move(diag)) {
  if (diag_.size() != factor_.R.rows())
    throw InvalidArgument("LowRankPreconditioner: diagonal size mismatch");
  if (!(diag_.array() > 0.0).all())
    throw InvalidArgument("LowRankPreconditioner: diagonal must be strictly positive");
  DinvR_ = diag_.cwiseInverse().asDiagonal() * factor_.R;
  Matrix cap = factor_.R.transpose() * DinvR_;
  cap.diagonal().array() += 1.0;
  capacitance_.compute(cap);
  if (capacitance_.info() != Eigen::Success)
    throw NotPositiveDefinite("LowRankPreconditioner: capacitance matrix not positive definite");
}

LowRankPreconditioner::LowRankPreconditioner(LowRankFactor factor, double noise)
    : LowRankPreconditioner(factor, Vector::Constant(factor.R.rows(), noise)) {}

Vector LowRankPreconditioner::apply(const Vector& r) const {
  // (D + R Rᵀ)⁻¹ r = D⁻¹ r - D⁻¹ R (I + Rᵀ D⁻¹ R)⁻¹ Rᵀ D⁻¹ r
  const Vector t = capacitance_.solve(DinvR_.transpose() * r);
  return r.cwiseQuotient(diag_) - DinvR_ * t;
}

std::pair<Vector, CgReport> cg_solve(const LinearOperator& apply_A, const Vector& b,
                                     const LowRankPreconditioner* precond,
                                     const CgOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("cg_solve: tol must be positive");
  const Index n = b.size();
  if (precond && precond->size() != n)
    throw InvalidArgument("cg_solve: preconditioner size mismatch");
  const Index max_iter = options.max_iter > 0 ? options.max_iter : 4 * std::max<Index>(n, 1);

  CgReport report;
  Vector x = Vector::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    report.converged = true;
    return {x, report};
  }

  Vector r = b;
  Vector z = precond ? precond->apply(r) : r;
  Vector p = z;
  double rz = r.dot(z);
  double rel = 1.0;
  for (Index it = 1; it <= max_iter; ++it) {
    const Vector Ap = apply_A(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) break;  // operator not positive definite along p
    const double alpha = rz / pAp;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    report.iterations = it;
    rel = r.norm() / b_norm;
    if (rel <= options.tol) {
      // Confirm against the true residual; the recursive one drifts.
      const double true_rel = (b - apply_A(x)).norm() / b_norm;
      if (true_rel <= options.tol) {
        report.final_residual_norm = true_rel;
        report.converged = true;
        return {x, report};
      }
      r = b - apply_A(x);
    }
    z = precond ? precond->apply(r) : r;
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  report.final_residual_norm = (b - apply_A(x)).norm() / b_norm;
  report.converged = report.final_residual_norm <= options.tol;
  return {x, report};
}

std::pair<Matrix, std::vector<CgReport>> cg_solve(const LinearOperator& apply_A,
                                                  const Matrix& B,
                                                  const LowRankPreconditioner* precond,
                                                  const CgOptions& options) {
  Matrix X(B.rows(), B.cols());
  std::vector<CgReport> reports;
  reports.reserve(B.cols());
  for (Index j = 0; j < B.cols(); ++j) {
    auto [x, report] = cg_solve(apply_A, Vector(B.col(j)), precond, options);
    X.col(j) = x;
    reports.push_back(report);
  }
  return {X, reports};
}

}  // namespace pathwise::linalg
