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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "pathwise/kernels.hpp"
#include "pathwise/linalg.hpp"

using namespace pathwise;
using namespace pathwise::linalg;

TEST_CASE("two by two factor by hand") {
  Matrix A(2, 2);
  A << 4, 2, 2, 3;
  const auto f = cholesky(A);
  CHECK(f.jitter_used == 0.0);
  CHECK(f.L(0, 0) == doctest::Approx(2.0));
  CHECK(f.L(0, 1) == 0.0);
  CHECK(f.L(1, 0) == doctest::Approx(1.0));
  CHECK(f.L(1, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("factor agrees with the textbook algorithm on random SPD matrices") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + trial * 3;
    const Matrix A = oracle::random_spd(n, rng);
    const auto f = cholesky(A);
    const Matrix L = oracle::cholesky(A);
    CHECK((f.L - L).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((f.L.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("jitter ladder rescues singular PSD matrices") {
  const Matrix A = Matrix::Ones(5, 5);
  const auto f = cholesky(A);
  CHECK(f.jitter_used > 0.0);
  CHECK(f.jitter_used <= 1e-6 * 1.0);
  Matrix B = A;
  B.diagonal().array() += f.jitter_used;
  CHECK((f.L * f.L.transpose() - B).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(cholesky(A, 0.0), NotPositiveDefinite);
}

TEST_CASE("indefinite and asymmetric inputs are rejected") {
  Matrix A(2, 2);
  A << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(A), NotPositiveDefinite);
  Matrix B(2, 2);
  B << 2, 1, 0, 2;
  CHECK_THROWS_AS(cholesky(B), InvalidArgument);
  CHECK_THROWS_AS(cholesky(Matrix::Zero(2, 3)), InvalidArgument);
}

TEST_CASE("solve_psd matches Gaussian elimination") {
  Rng rng(9);
  const Matrix A = oracle::random_spd(12, rng);
  const Matrix B = standard_normal(12, 3, rng);
  const auto f = cholesky(A);
  CHECK((solve_psd(f, B) - oracle::solve(A, B)).cwiseAbs().maxCoeff() < 1e-10);
  const Vector b = B.col(0);
  CHECK((solve_psd(f, b) - oracle::solve(A, b)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("appending a row matches refactoring") {
  Rng rng(13);
  const Matrix A = oracle::random_spd(9, rng);
  const auto f = cholesky(A.topLeftCorner(8, 8));
  const auto g = cholesky_append(f, A.col(8).head(8), A(8, 8));
  CHECK((g.L - oracle::cholesky(A)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(cholesky_append(f, A.col(8).head(8), -1.0), NotPositiveDefinite);
  const auto empty = cholesky_append(CholeskyFactor{Matrix(0, 0), 0.0}, Vector(0), 4.0);
  CHECK(empty.L(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("psd square root") {
  Rng rng(17);
  const Matrix A = oracle::random_spd(10, rng, 0.0);
  const Matrix R = psd_sqrt(A);
  CHECK((R - R.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((R * R - A).cwiseAbs().maxCoeff() < 1e-10);
  const Matrix P = Matrix::Ones(4, 4);
  CHECK((psd_sqrt(P) * psd_sqrt(P) - P).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(psd_sqrt(-Matrix::Identity(3, 3)), NotPositiveDefinite);
}

TEST_CASE("pivoted Cholesky") {
  Rng rng(19);
  const Matrix A = oracle::random_spd(15, rng);
  SUBCASE("full rank reproduces the matrix") {
    const auto f = pivoted_cholesky(A, 15);
    CHECK((f.R * f.R.transpose() - A).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(f.trace_residuals.back() == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("trace residuals decrease and match the definition") {
    const auto f = pivoted_cholesky(A, 6);
    REQUIRE(f.trace_residuals.size() == 6);
    for (std::size_t i = 1; i < 6; ++i) CHECK(f.trace_residuals[i] <= f.trace_residuals[i - 1]);
    CHECK(f.trace_residuals.back() ==
          doctest::Approx((A - f.R * f.R.transpose()).trace()).epsilon(1e-10));
    // Pivots are distinct.
    auto p = f.pivots;
    std::sort(p.begin(), p.end());
    CHECK(std::adjacent_find(p.begin(), p.end()) == p.end());
  }
  SUBCASE("clustered points are captured at low rank") {
    Locations X(60, 1);
    for (Index i = 0; i < 60; ++i) X(i, 0) = (i % 3) * 10.0 + 1e-4 * i;
    const Matrix K = Kernel(KernelFamily::SquaredExponential, 1, 1.0, 1.0).eval(X);
    const auto f = pivoted_cholesky(K, 3);
    CHECK(f.trace_residuals.back() < 1e-3 * K.trace());
  }
  CHECK_THROWS_AS(pivoted_cholesky(A, 0), InvalidArgument);
}

TEST_CASE("Woodbury preconditioner inverts low rank plus diagonal") {
  Rng rng(23);
  const Matrix A = oracle::random_spd(20, rng, 0.0);
  const auto f = pivoted_cholesky(A, 5);
  const Vector d = Vector::Constant(20, 0.3) + 0.1 * Vector::LinSpaced(20, 0, 1);
  const LowRankPreconditioner P(f, d);
  Matrix M = f.R * f.R.transpose();
  M.diagonal() += d;
  const Vector r = standard_normal(20, rng);
  CHECK((P.apply(r) - oracle::solve(M, r)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(LowRankPreconditioner(f, 0.0), InvalidArgument);
}

TEST_CASE("conjugate gradients") {
  Rng rng(29);
  Locations X = oracle::uniform(200, 1, rng);
  Matrix K = Kernel(KernelFamily::SquaredExponential, 1, 0.1, 1.0).eval(X);
  K.diagonal().array() += 1e-2;
  const Vector b = standard_normal(200, rng);
  const LinearOperator op = [&K](const Vector& v) { return Vector(K * v); };
  const Vector truth = oracle::solve(K, b);

  const auto [v0, r0] = cg_solve(op, b, nullptr, {1e-10, 0});
  CHECK(r0.converged);
  CHECK((v0 - truth).norm() / truth.norm() < 1e-7);
  CHECK((K * v0 - b).norm() / b.norm() == doctest::Approx(r0.final_residual_norm).epsilon(0.5));

  const LowRankPreconditioner P(pivoted_cholesky(K - 1e-2 * Matrix::Identity(200, 200), 20), 1e-2);
  const auto [v1, r1] = cg_solve(op, b, &P, {1e-10, 0});
  CHECK(r1.converged);
  CHECK(r1.iterations <= r0.iterations);
  CHECK((v1 - truth).norm() / truth.norm() < 1e-7);

  const auto [v2, r2] = cg_solve(op, b, nullptr, {1e-10, 3});
  CHECK_FALSE(r2.converged);
  CHECK(r2.iterations == 3);

  Matrix B(200, 2);
  B << b, 2.0 * b;
  const auto [V, reports] = cg_solve(op, B, &P, {1e-10, 0});
  REQUIRE(reports.size() == 2);
  CHECK((V.col(1) - 2.0 * V.col(0)).norm() < 1e-6 * V.col(1).norm());

  const auto [z, rz] = cg_solve(op, Vector(Vector::Zero(200)), nullptr, linalg::CgOptions{});
  CHECK(rz.converged);
  CHECK(z.norm() == 0.0);
}
