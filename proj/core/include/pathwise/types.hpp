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
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace pathwise {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Locations are stored one point per row: an n x d matrix.
using Locations = Eigen::MatrixXd;

/// All sampling is driven by a caller-owned 64-bit Mersenne twister.
using Rng = std::mt19937_64;

/// Mean vector and covariance matrix of process values at finite locations.
struct GaussianMoments {
  Vector mean;
  Matrix covariance;

  Index size() const { return mean.size(); }
};

/// Derives an independent stream from a root seed and a task index.
/// Used wherever work is split into replicates or trajectories.
Rng split_stream(std::uint64_t root_seed, std::uint64_t stream);

/// Seed of a child stream, for nesting: split_stream(derive_seed(a, i), j).
std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t stream);

/// Fills a vector with i.i.d. standard normal draws.
Vector standard_normal(Index n, Rng& rng);
Matrix standard_normal(Index rows, Index cols, Rng& rng);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable tag (e.g. "invalid_argument").
  virtual const char* tag() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "invalid_argument"; }
};

class UnsupportedFamily : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "unsupported_family"; }
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "not_positive_definite"; }
};

class SolveFailure : public Error {
 public:
  using Error::Error;
  const char* tag() const noexcept override { return "solve_failure"; }
};

}  // namespace pathwise
