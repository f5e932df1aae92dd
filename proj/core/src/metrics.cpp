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

#include "pathwise/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "pathwise/linalg.hpp"
#include "vmath.hpp"

namespace pathwise {

void SampleBatch::validate() const {
  if (values.rows() < 2) throw InvalidArgument("SampleBatch: need at least two draws");
  if (locations.rows() > 0 && locations.rows() != values.cols())
    throw InvalidArgument("SampleBatch: one location per column required");
}

GaussianMoments empirical_moments(const SampleBatch& batch) {
  batch.validate();
  MomentAccumulator acc(batch.points());
  acc.add(batch.values);
  return acc.moments();
}

MomentAccumulator::MomentAccumulator(Index points)
    : sum_(Vector::Zero(points)), cross_(Matrix::Zero(points, points)) {}

void MomentAccumulator::add(const Matrix& rows) {
  if (rows.cols() != sum_.size()) throw InvalidArgument("MomentAccumulator: column count mismatch");
  if (rows.rows() == 0) return;
  if (count_ == 0) shift_ = rows.row(0).transpose();
  const Matrix centered = rows.rowwise() - shift_.transpose();
  sum_ += centered.colwise().sum().transpose();
  cross_.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  count_ += rows.rows();
}

GaussianMoments MomentAccumulator::moments() const {
  if (count_ < 2) throw InvalidArgument("MomentAccumulator: need at least two draws");
  const double S = static_cast<double>(count_);
  const Vector centered_mean = sum_ / S;
  GaussianMoments out;
  out.mean = shift_ + centered_mean;
  Matrix cross = cross_.selfadjointView<Eigen::Lower>();
  out.covariance = (cross - S * centered_mean * centered_mean.transpose()) / (S - 1.0);
  return out;
}

double w2_gaussian(const GaussianMoments& a, const GaussianMoments& b) {
  const Index n = a.size();
  if (b.size() != n || a.covariance.rows() != n || b.covariance.rows() != n ||
      a.covariance.cols() != n || b.covariance.cols() != n)
    throw InvalidArgument("w2_gaussian: dimensions do not match");
  if (n == 0) return 0.0;
  const Matrix root_b = linalg::psd_sqrt(b.covariance);
  Matrix M = root_b * a.covariance * root_b;
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw SolveFailure("w2_gaussian: eigensolver failed");
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double total = a.covariance.trace() + b.covariance.trace();
  double bures = total - 2.0 * cross;
  if (bures <= 64.0 * std::numeric_limits<double>::epsilon() * total) bures = 0.0;
  return std::sqrt((a.mean - b.mean).squaredNorm() + bures);
}

namespace {

bool lexicographically_less(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
  return false;
}

// out_i = -eps * log sum_j exp(log_w_j + (pot_j - C_ij) / eps), where column
// i of Ct holds row i of C.
void soft_min_rows(const Matrix& Ct, const Vector& pot, const Vector& log_w, double eps,
                   Vector& h, Vector& out) {
  h = pot + eps * log_w;
  out.resize(Ct.cols());
  detail::soft_min_columns(Ct.data(), static_cast<std::size_t>(Ct.rows()),
                           static_cast<std::size_t>(Ct.cols()), h.data(), eps, out.data());
}

}  // namespace

SinkhornResult sinkhorn_distance(const Matrix& a_in, const Matrix& b_in, double reg,
                                 const SinkhornOptions& options) {
  if (a_in.cols() != b_in.cols()) throw InvalidArgument("sinkhorn_distance: column counts differ");
  if (a_in.rows() < 1 || b_in.rows() < 1) throw InvalidArgument("sinkhorn_distance: empty batch");
  if (!(reg > 0.0)) throw InvalidArgument("sinkhorn_distance: reg must be positive");
  if (options.max_iter < 1) throw InvalidArgument("sinkhorn_distance: max_iter must be positive");
  const bool swap = lexicographically_less(b_in, a_in);
  const Matrix& a = swap ? b_in : a_in;
  const Matrix& b = swap ? a_in : b_in;

  const Index na = a.rows(), nb = b.rows();
  Matrix C = (-2.0 * a * b.transpose()).colwise() + a.rowwise().squaredNorm();
  C.rowwise() += b.rowwise().squaredNorm().transpose();
  C = C.cwiseMax(0.0);
  const Matrix Ct = C.transpose();

  SinkhornResult result;
  const double mean_cost = C.mean();
  if (mean_cost == 0.0) {
    result.converged = true;
    return result;
  }
  const double eps = reg * mean_cost;
  result.reg_absolute = eps;

  const Vector log_a = Vector::Constant(na, -std::log(static_cast<double>(na)));
  const Vector log_b = Vector::Constant(nb, -std::log(static_cast<double>(nb)));
  Vector f = Vector::Zero(na), g = Vector::Zero(nb), f_next(na), h;

  // Anneal eps from the largest cost scale down to the target.
  double stage = std::max(eps, C.maxCoeff());
  Index iterations = 0;
  while (stage > eps && iterations < options.max_iter) {
    for (int k = 0; k < 4 && iterations < options.max_iter; ++k, ++iterations) {
      soft_min_rows(Ct, g, log_b, stage, h, f);
      soft_min_rows(C, f, log_a, stage, h, g);
    }
    stage = std::max(eps, 0.5 * stage);
  }
  // After a g-update the column marginals are exact; the row marginal of
  // the plan (f, g) is a_i exp((f_i - f_next_i) / eps).
  double error = std::numeric_limits<double>::infinity();
  for (;;) {
    soft_min_rows(Ct, g, log_b, eps, h, f_next);
    if (iterations > 0) {
      error = (((f - f_next) / eps).array().exp() - 1.0).abs().sum() / static_cast<double>(na);
      if (error < options.tol || iterations >= options.max_iter) break;
    }
    f = f_next;
    soft_min_rows(C, f, log_a, eps, h, g);
    ++iterations;
  }
  Matrix P = ((-C).colwise() + f).rowwise() + g.transpose();
  P = (P / eps).array().exp().matrix() / static_cast<double>(na * nb);
  result.marginal_error = error;
  result.iterations = iterations;
  result.converged = error < options.tol;
  result.distance = std::sqrt(std::max(0.0, P.cwiseProduct(C).sum()));
  return result;
}

SinkhornResult sinkhorn_distance(const SampleBatch& a, const SampleBatch& b, double reg,
                                 const SinkhornOptions& options) {
  return sinkhorn_distance(a.values, b.values, reg, options);
}

double kernel_sup_error(const Kernel& kernel, const FourierFeatureMap& basis,
                        const Locations& grid) {
  if (grid.rows() < 1) throw InvalidArgument("kernel_sup_error: empty grid");
  if (grid.cols() != kernel.dim() || basis.dim() != kernel.dim())
    throw InvalidArgument("kernel_sup_error: dimension mismatch");
  const Matrix Phi = basis.features(grid);
  return (Phi * Phi.transpose() - kernel.eval(grid)).cwiseAbs().maxCoeff();
}

MomentErrors standardized_moment_errors(const GaussianMoments& empirical,
                                        const GaussianMoments& reference, Index samples,
                                        double stderr_floor) {
  const Index n = reference.size();
  if (empirical.size() != n || empirical.covariance.rows() != n ||
      reference.covariance.rows() != n)
    throw InvalidArgument("standardized_moment_errors: dimensions do not match");
  if (samples < 2) throw InvalidArgument("standardized_moment_errors: need at least two samples");
  const double S = static_cast<double>(samples);
  const Vector var = reference.covariance.diagonal().cwiseMax(0.0);
  MomentErrors out;
  for (Index i = 0; i < n; ++i) {
    const double se = std::max(std::sqrt(var(i) / S), stderr_floor);
    out.mean_z = std::max(out.mean_z, std::abs(empirical.mean(i) - reference.mean(i)) / se);
    for (Index j = 0; j <= i; ++j) {
      const double s = reference.covariance(i, j);
      const double se_c = std::max(std::sqrt((s * s + var(i) * var(j)) / S), stderr_floor);
      out.covariance_z = std::max(
          out.covariance_z, std::abs(empirical.covariance(i, j) - s) / se_c);
    }
  }
  return out;
}

}  // namespace pathwise
