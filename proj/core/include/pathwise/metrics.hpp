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

#include <algorithm>

#include "pathwise/kernels.hpp"
#include "pathwise/prior.hpp"
#include "pathwise/types.hpp"

namespace pathwise {

/// S draws (rows) of a process at n locations.
struct SampleBatch {
  Matrix values;       // S x n
  Locations locations; // n x d, may be empty when only values matter

  Index draws() const { return values.rows(); }
  Index points() const { return values.cols(); }
  void validate() const;
};

/// Sample mean and unbiased sample covariance.
GaussianMoments empirical_moments(const SampleBatch& batch);

/// Streaming accumulator for the same estimator. Rows may arrive in any
/// number of chunks.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Index points);
  void add(const Matrix& rows);
  Index count() const { return count_; }
  GaussianMoments moments() const;

 private:
  Index count_ = 0;
  Vector shift_;
  Vector sum_;
  Matrix cross_;
};

/// 2-Wasserstein distance between two Gaussians (Bures formula).
double w2_gaussian(const GaussianMoments& a, const GaussianMoments& b);

struct SinkhornResult {
  double distance = 0.0;      // sqrt of <P, C>
  double reg_absolute = 0.0;  // reg times mean pairwise cost
  Index iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

struct SinkhornOptions {
  Index max_iter = 10000;
  double tol = 1e-6;  // l1 marginal violation
};

/// Entropic optimal transport between the empirical measures of two
/// batches under squared Euclidean cost. Each row is one point. reg is
/// relative to the mean pairwise cost.
SinkhornResult sinkhorn_distance(const SampleBatch& a, const SampleBatch& b, double reg = 1e-2,
                                 const SinkhornOptions& options = {});
SinkhornResult sinkhorn_distance(const Matrix& a, const Matrix& b, double reg = 1e-2,
                                 const SinkhornOptions& options = {});

/// max over grid x grid of |phi(x)^T phi(x') - k(x, x')|.
double kernel_sup_error(const Kernel& kernel, const FourierFeatureMap& basis,
                        const Locations& grid);

/// Largest standardized entrywise errors of empirical moments against
/// reference Gaussian moments, using the sampling standard errors of the
/// mean and of a Gaussian sample covariance.
struct MomentErrors {
  double mean_z = 0.0;
  double covariance_z = 0.0;
  double max() const { return std::max(mean_z, covariance_z); }
};

MomentErrors standardized_moment_errors(const GaussianMoments& empirical,
                                        const GaussianMoments& reference, Index samples,
                                        double stderr_floor = 1e-12);

}  // namespace pathwise
