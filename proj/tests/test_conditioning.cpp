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
#include <numeric>

#include "oracles.hpp"
#include "pathwise/conditioning.hpp"

using namespace pathwise;

namespace {

Kernel se(Index d = 1, double l = 0.3, double var = 1.0) {
  return Kernel(KernelFamily::SquaredExponential, d, l, var);
}

Locations grid1(Index n, double lo = 0.0, double hi = 1.0) {
  return Vector::LinSpaced(n, lo, hi);
}

Locations stack(const Locations& A, const Locations& B) {
  Locations out(A.rows() + B.rows(), A.cols());
  out << A, B;
  return out;
}

// Exact prior draws tabulated on X_train ∪ X_test.
std::vector<PriorPath> exact_paths(const Kernel& k, const Locations& X_train,
                                   const Locations& X_test, Index S, Rng& rng) {
  const Locations all = stack(X_train, X_test);
  return tabulate(all, sample_exact(k, all, S, rng));
}

Dataset draw_dataset(const Kernel& k, const Locations& X, double noise, Rng& rng) {
  Vector y = sample_exact(k, X, 1, rng).row(0).transpose();
  if (noise > 0.0) y += std::sqrt(noise) * standard_normal(X.rows(), rng);
  return {X, y, noise};
}

std::shared_ptr<const ConditioningSystem> system_for(const Kernel& k, const Locations& C,
                                                     const Vector& noise) {
  return std::make_shared<const ConditioningSystem>(k, C, noise);
}

// Moments of ∫ p(f* | u) q(u) du with explicit inverses.
void nystrom_oracle(const Kernel& k, const Locations& Z, const Vector& mu, const Matrix& Sigma,
                    const Locations& Xs, Vector& mean, Matrix& cov) {
  const Matrix Kinv = oracle::inverse(k.eval(Z));
  const Matrix A = Kinv * k.eval(Z, Xs);
  mean = A.transpose() * mu;
  cov = k.eval(Xs) - k.eval(Xs, Z) * A + A.transpose() * Sigma * A;
}

}  // namespace

// ---------------------------------------------------------------------------
// matheron_finite

TEST_CASE("matheron_finite: zero residual and independence") {
  const Vector a = (Vector(2) << 0.3, -1.2).finished();
  const Vector b = (Vector(1) << 0.7).finished();
  const Matrix Sab = (Matrix(2, 1) << 0.4, 0.1).finished();
  const Matrix Sbb = (Matrix(1, 1) << 2.0).finished();
  CHECK(matheron_finite(a, b, b, Sab, Sbb) == a);
  CHECK(matheron_finite(a, b, (Vector(1) << 5.0).finished(), Matrix::Zero(2, 1), Sbb) == a);
}

TEST_CASE("matheron_finite: bivariate normal with correlation 0.75") {
  Rng rng(1);
  const double rho = 0.75, beta = 1.0;
  const Matrix Sab = (Matrix(1, 1) << rho).finished();
  const Matrix Sbb = (Matrix(1, 1) << 1.0).finished();
  const Index S = 100000;
  Vector out(S);
  for (Index s = 0; s < S; ++s) {
    const Vector z = standard_normal(2, rng);
    const Vector a = (Vector(1) << z(0)).finished();
    const Vector b = (Vector(1) << rho * z(0) + std::sqrt(1 - rho * rho) * z(1)).finished();
    out(s) = matheron_finite(a, b, (Vector(1) << beta).finished(), Sab, Sbb)(0);
  }
  const double m = out.mean();
  const double v = (out.array() - m).square().sum() / (S - 1.0);
  const double target_v = 1.0 - rho * rho;  // 0.4375
  CHECK(std::abs(m - rho * beta) <= 3.0 * std::sqrt(target_v / S));
  CHECK(std::abs(v - target_v) <= 3.0 * target_v * std::sqrt(2.0 / S));
}

// ---------------------------------------------------------------------------
// posterior_moments

TEST_CASE("posterior_moments: interpolation and empty data") {
  Rng rng(2);
  const Kernel k = se();
  const Locations X = grid1(5);
  const Dataset data = draw_dataset(k, X, 0.0, rng);
  const auto m = posterior_moments(k, data, X);
  CHECK((m.mean - data.y).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(m.covariance.cwiseAbs().maxCoeff() < 1e-8);

  const Dataset empty{Locations(0, 1), Vector(0), 0.0};
  const auto p = posterior_moments(k, empty, X);
  CHECK(p.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK((p.covariance - k.eval(X)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("posterior_moments: two observations match dense joint conditioning") {
  const Kernel k = se(1, 0.5);
  const Locations X = (Locations(2, 1) << 0.1, 0.6).finished();
  const Locations Xs = (Locations(1, 1) << 0.35).finished();
  const Vector y = (Vector(2) << 0.8, -0.4).finished();
  for (double noise : {0.0, 0.05}) {
    // Joint covariance of (f(x1), f(x2), f(x*)) and the Schur complement.
    const Locations all = stack(X, Xs);
    const Matrix J = k.eval(all);
    Vector mean;
    Matrix cov;
    oracle::posterior(J.topLeftCorner(2, 2), J.topRightCorner(2, 1), J.bottomRightCorner(1, 1), y,
                      noise, mean, cov);
    const auto m = posterior_moments(k, Dataset{X, y, noise}, Xs);
    CHECK(std::abs(m.mean(0) - mean(0)) < 1e-10);
    CHECK(std::abs(m.covariance(0, 0) - cov(0, 0)) < 1e-10);
  }
}

// ---------------------------------------------------------------------------
// canonical_update

TEST_CASE("canonical_update: own values leave the path unchanged") {
  Rng rng(3);
  const auto basis = build_rff_basis(se(), 64, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Locations X = grid1(6);
  const auto post = canonical_update(p, Dataset{X, eval_path(p, X), 0.0});
  CHECK(post.coefficients().cwiseAbs().maxCoeff() < 1e-10);
  const Locations G = grid1(50, -0.5, 1.5);
  CHECK((eval_path(post, G) - eval_path(p, G)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("canonical_update: interpolates random problems") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel k = se(2, 0.4);
    const auto basis = build_rff_basis(k, 256, rng);
    const PriorPath p = sample_prior_path(basis, 1, rng)[0];
    const Locations X = oracle::uniform(16, 2, rng);
    const Vector y = standard_normal(16, rng);
    const auto post = canonical_update(p, Dataset{X, y, 0.0});
    CHECK((eval_path(post, X) - y).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("canonical_update: RFF prior moments match the decoupled oracle") {
  Rng rng(5);
  const Kernel k = se(1, 0.2);
  const auto basis = build_rff_basis(k, 32, rng);
  const Locations X = grid1(6, 0.1, 0.9);
  const Dataset data = draw_dataset(k, X, 0.0, rng);
  const Locations Xs = grid1(32, -0.2, 1.2);
  const auto post = canonical_update(sample_prior_path(basis, 100000, rng), data);
  const auto ref = decoupled_posterior_covariance(*basis, k, data, Xs);
  CHECK(oracle::moment_z(eval_paths(post, Xs), ref.mean, ref.covariance).max() <= 4.0);
}

TEST_CASE("canonical_update: exact prior moments match the posterior") {
  Rng rng(6);
  const Kernel k(KernelFamily::Matern52, 1, 0.3, 1.0);
  const Locations X = grid1(5, 0.05, 0.95), Xs = grid1(12, -0.3, 1.3);
  const Dataset data = draw_dataset(k, X, 0.0, rng);
  const auto paths = exact_paths(k, X, Xs, 100000, rng);
  const auto post = canonical_update(paths, data, system_for(k, X, Vector::Zero(5)));
  const auto ref = posterior_moments(k, data, Xs);
  CHECK(oracle::moment_z(eval_paths(post, Xs), ref.mean, ref.covariance, 1e-10).max() <= 4.0);
}

TEST_CASE("canonical_update: error cases") {
  Rng rng(7);
  const auto basis = build_rff_basis(se(), 16, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Locations dup = (Locations(3, 1) << 0.1, 0.5, 0.1).finished();
  CHECK_THROWS_AS(canonical_update(p, Dataset{dup, Vector::Zero(3), 0.0}), SolveFailure);
  CHECK_THROWS_AS(canonical_update(p, Dataset{grid1(3), Vector::Zero(3), 0.1}), InvalidArgument);
  CHECK_THROWS_AS(canonical_update(p, Dataset{grid1(3), Vector::Zero(2), 0.0}), InvalidArgument);
  CHECK_THROWS_AS(canonical_update(p, Dataset{Locations(3, 2), Vector::Zero(3), 0.0}),
                  InvalidArgument);
  const auto tab = tabulate(grid1(3), Matrix::Zero(1, 3));
  CHECK_THROWS_AS(canonical_update(tab[0], Dataset{grid1(3), Vector::Zero(3), 0.0}),
                  InvalidArgument);
}

// ---------------------------------------------------------------------------
// gaussian_update

TEST_CASE("gaussian_update: uninformative likelihood leaves the prior") {
  Rng rng(8);
  const Kernel k = se();
  const auto basis = build_rff_basis(k, 64, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Dataset data{grid1(4), Vector::Ones(4), 1e6};
  const auto post = gaussian_update(p, data, DirectCholesky{}, rng);
  const Locations G = grid1(100, -1.0, 2.0);
  CHECK((eval_path(post, G) - eval_path(p, G)).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("gaussian_update: exact prior moments match the posterior") {
  Rng rng(9);
  const Kernel k = se(1, 0.25);
  const Locations X = grid1(8), Xs = grid1(16, -0.1, 1.1);
  const Dataset data = draw_dataset(k, X, 1e-3, rng);
  const auto paths = exact_paths(k, X, Xs, 100000, rng);
  const auto post = gaussian_update(paths, data, system_for(k, X, Vector::Constant(8, 1e-3)), rng);
  const auto ref = posterior_moments(k, data, Xs);
  CHECK(oracle::moment_z(eval_paths(post, Xs), ref.mean, ref.covariance).max() <= 4.0);
}

TEST_CASE("gaussian_update: CG agrees with Cholesky under shared noise draws") {
  Rng rng(10);
  const Kernel k(KernelFamily::Matern32, 2, 0.3, 1.0);
  const auto basis = build_rff_basis(k, 512, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Locations X = oracle::uniform(512, 2, rng);
  const Dataset data{X, standard_normal(512, rng), 1e-2};
  Rng r1(11), r2(11);
  const auto direct = gaussian_update(p, data, DirectCholesky{}, r1);
  const auto cg = gaussian_update(p, data, ConjugateGradients{1e-12, 0, 32}, r2);
  REQUIRE(cg.solve_report());
  CHECK(cg.solve_report()->converged);
  CHECK(direct.noise_draws() == cg.noise_draws());
  CHECK((direct.coefficients() - cg.coefficients()).norm() <=
        1e-6 * direct.coefficients().norm());
}

TEST_CASE("gaussian_update: requires positive noise") {
  Rng rng(12);
  const PriorPath p = sample_prior_path(build_rff_basis(se(), 8, rng), 1, rng)[0];
  CHECK_THROWS_AS(gaussian_update(p, Dataset{grid1(2), Vector::Zero(2), 0.0}, DirectCholesky{}, rng),
                  InvalidArgument);
}

// ---------------------------------------------------------------------------
// sparse and pseudo-data updates

TEST_CASE("sparse_update: deterministic inducing values") {
  Rng rng(13);
  const Kernel k = se();
  const PriorPath p = sample_prior_path(build_rff_basis(k, 64, rng), 1, rng)[0];
  const Locations Z = grid1(5);
  const InducingModel own{Z, InducingMoments{eval_path(p, Z), Matrix::Zero(5, 5)}};
  const auto same = sparse_update(p, own, DirectCholesky{}, rng);
  CHECK(same.coefficients().cwiseAbs().maxCoeff() < 1e-10);

  const Vector mu = Vector::LinSpaced(5, -1.0, 1.0);
  const auto post = sparse_update(p, InducingModel{Z, InducingMoments{mu, Matrix::Zero(5, 5)}},
                                  DirectCholesky{}, rng);
  CHECK((eval_path(post, Z) - mu).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("sparse_update: moments match the marginalized inducing oracle") {
  Rng rng(14);
  const Kernel k = se(1, 0.3);
  const Locations Xn = oracle::uniform(20, 1, rng);
  const Dataset data = draw_dataset(k, Xn, 1e-2, rng);
  const Locations Z = grid1(6), Xs = grid1(10, -0.2, 1.2);
  const auto q = posterior_moments(k, data, Z);
  const InducingModel model{Z, InducingMoments{q.mean, q.covariance}};
  const auto paths = exact_paths(k, Z, Xs, 100000, rng);
  const auto post = sparse_update(paths, model, system_for(k, Z, Vector::Zero(6)), rng);
  Vector mean;
  Matrix cov;
  nystrom_oracle(k, Z, q.mean, q.covariance, Xs, mean, cov);
  const auto lib = inducing_posterior_moments(k, model, Xs);
  CHECK((lib.mean - mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((lib.covariance - cov).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(oracle::moment_z(eval_paths(post, Xs), mean, cov).max() <= 4.0);
}

TEST_CASE("pseudo_data_moments: closed forms") {
  Rng rng(15);
  const Kernel k = se(1, 0.4);
  const Locations Z = grid1(7);
  const Vector yt = standard_normal(7, rng);
  const Vector lam = (Vector(7) << 0.1, 0.2, 0.05, 0.3, 0.1, 0.4, 0.2).finished();
  const auto q = pseudo_data_moments(k, Z, PseudoData{yt, lam});
  const Matrix K = k.eval(Z);
  Matrix KL = K;
  KL.diagonal() += lam;
  CHECK((q.mean - K * oracle::solve(KL, yt)).cwiseAbs().maxCoeff() < 1e-8);
  const Matrix target = oracle::inverse(oracle::inverse(K) + Matrix(lam.cwiseInverse().asDiagonal()));
  CHECK((q.covariance - target).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pseudo_data_update: same law as the sparse update with matching moments") {
  Rng rng(16);
  const Kernel k = se(1, 0.3);
  const Locations Z = grid1(8), Xs = grid1(10, -0.2, 1.2);
  const PseudoData pd{standard_normal(8, rng), Vector::Constant(8, 0.05)};
  const auto q = pseudo_data_moments(k, Z, pd);
  const auto sys_pd = system_for(k, Z, pd.noise_variances);
  const auto sys_sp = system_for(k, Z, Vector::Zero(8));
  const auto pseudo =
      pseudo_data_update(exact_paths(k, Z, Xs, 100000, rng), InducingModel{Z, pd}, sys_pd, rng);
  const auto sparse = sparse_update(exact_paths(k, Z, Xs, 100000, rng),
                                    InducingModel{Z, InducingMoments{q.mean, q.covariance}},
                                    sys_sp, rng);
  Vector mean;
  Matrix cov;
  nystrom_oracle(k, Z, q.mean, q.covariance, Xs, mean, cov);
  CHECK(oracle::moment_z(eval_paths(pseudo, Xs), mean, cov).max() <= 4.0);
  CHECK(oracle::moment_z(eval_paths(sparse, Xs), mean, cov).max() <= 4.0);
}

TEST_CASE("pseudo_data_update: large pseudo-noise leaves the prior") {
  Rng rng(17);
  const Kernel k = se();
  const PriorPath p = sample_prior_path(build_rff_basis(k, 64, rng), 1, rng)[0];
  const Locations Z = grid1(5);
  const InducingModel model{Z, PseudoData{Vector::Ones(5), Vector::Constant(5, 1e6)}};
  const auto post = pseudo_data_update(p, model, DirectCholesky{}, rng);
  const Locations G = grid1(100, -1.0, 2.0);
  CHECK((eval_path(post, G) - eval_path(p, G)).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("pseudo-noise improves CG conditioning") {
  Rng rng(18);
  const Kernel k = se(2, 0.5);
  const Locations Z = oracle::uniform(200, 2, rng);
  const Matrix K = k.eval(Z);
  const Vector b = standard_normal(200, rng);
  const auto iterations = [&](double shift) {
    const linalg::LinearOperator op = [&K, shift](const Vector& v) -> Vector {
      return K * v + shift * v;
    };
    return linalg::cg_solve(op, b, nullptr, linalg::CgOptions{1e-8, 2000}).second.iterations;
  };
  CHECK(iterations(1.0) <= iterations(1e-6));
}

TEST_CASE("InducingModel validation") {
  Rng rng(19);
  const PriorPath p = sample_prior_path(build_rff_basis(se(), 8, rng), 1, rng)[0];
  const Locations Z = grid1(3);
  CHECK_THROWS_AS(pseudo_data_update(p, InducingModel{Z, PseudoData{Vector::Zero(3), Vector::Zero(3)}},
                                     DirectCholesky{}, rng),
                  InvalidArgument);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(sparse_update(p, InducingModel{Z, InducingMoments{Vector::Zero(3), asym}},
                                DirectCholesky{}, rng),
                  InvalidArgument);
  CHECK_THROWS_AS(sparse_update(p, InducingModel{Z, PseudoData{Vector::Zero(3), Vector::Ones(3)}},
                                DirectCholesky{}, rng),
                  InvalidArgument);
}

// ---------------------------------------------------------------------------
// rank-1 updates

TEST_CASE("rank1_update: sequential additions reproduce the batch coefficients") {
  Rng rng(20);
  const Kernel k = se(2, 0.4);
  const PriorPath p = sample_prior_path(build_rff_basis(k, 128, rng), 1, rng)[0];
  const Index n = 16;
  const Locations X = oracle::uniform(n, 2, rng);
  const Vector y = standard_normal(n, rng);
  const double noise = 1e-2;
  const Vector eps = std::sqrt(noise) * standard_normal(n, rng);
  const auto batch = pathwise_update(p, system_for(k, X, Vector::Constant(n, noise)), y, eps);

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  PosteriorPath seq = PosteriorPath::from_prior(p, k);
  for (Index i : perm) seq = rank1_update(seq, X.row(i).transpose(), y(i), noise, eps(i));
  for (Index j = 0; j < n; ++j)
    CHECK(std::abs(seq.coefficients()(j) - batch.coefficients()(perm[static_cast<std::size_t>(j)])) <
          1e-8);
}

TEST_CASE("rank1_update: conditioning on the path's own value changes nothing") {
  Rng rng(21);
  const Kernel k = se();
  const PriorPath p = sample_prior_path(build_rff_basis(k, 64, rng), 1, rng)[0];
  const auto post = canonical_update(p, Dataset{grid1(4), standard_normal(4, rng), 0.0});
  const Vector x = (Vector(1) << 0.55).finished();
  const double own = eval_path(post, x.transpose())(0);
  const auto more = rank1_update(post, x, own, 0.0, rng);
  const Locations G = grid1(40, -0.5, 1.5);
  CHECK((eval_path(more, G) - eval_path(post, G)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rank1_update: from an empty update equals the one-point canonical update") {
  Rng rng(22);
  const Kernel k = se();
  const PriorPath p = sample_prior_path(build_rff_basis(k, 64, rng), 1, rng)[0];
  const Vector x = (Vector(1) << 0.3).finished();
  const auto one = rank1_update(PosteriorPath::from_prior(p, k), x, 1.5, 0.0, rng);
  const auto ref = canonical_update(p, Dataset{x.transpose(), Vector::Constant(1, 1.5), 0.0});
  CHECK(std::abs(one.coefficients()(0) - ref.coefficients()(0)) < 1e-12);
}

TEST_CASE("rank1_update: duplicate noise-free center is rejected") {
  Rng rng(23);
  const Kernel k = se();
  const PriorPath p = sample_prior_path(build_rff_basis(k, 16, rng), 1, rng)[0];
  const auto post = canonical_update(p, Dataset{grid1(3), Vector::Zero(3), 0.0});
  CHECK_THROWS_AS(rank1_update(post, grid1(3).row(1).transpose(), 0.0, 0.0, rng), InvalidArgument);
  CHECK_NOTHROW(rank1_update(post, grid1(3).row(1).transpose(), 0.0, 0.1, rng));
}

// ---------------------------------------------------------------------------
// weight-space updates

TEST_CASE("weight_space_update: consistent data leaves the weights") {
  Rng rng(24);
  const auto basis = build_rff_basis(se(), 32, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Locations X = grid1(5);
  const PriorPath q = weight_space_update(p, Dataset{X, eval_path(p, X), 0.0}, 0.0);
  CHECK((q.weights() - p.weights()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("weight_space_update: single observation is interpolated") {
  Rng rng(25);
  const auto basis = build_rff_basis(se(), 32, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Locations x = (Locations(1, 1) << 0.4).finished();
  const PriorPath q = weight_space_update(p, Dataset{x, Vector::Constant(1, 2.0), 0.0}, 0.0);
  CHECK(std::abs(eval_path(q, x)(0) - 2.0) < 1e-10);
  CHECK(q.basis() == p.basis());
}

TEST_CASE("weight_space_update: moments match the Bayesian linear model posterior") {
  Rng rng(26);
  const Kernel k = se(1, 0.3);
  const auto basis = build_rff_basis(k, 24, rng);
  const Locations X = grid1(6), Xs = grid1(12, -0.2, 1.2);
  const double noise = 1e-2;
  const Dataset data{X, standard_normal(6, rng), noise};
  const auto post = weight_space_update(sample_prior_path(basis, 100000, rng), data, noise, &rng);
  // GP posterior under the induced kernel φ(x)ᵀφ(x').
  const CovarianceFunction induced = [&basis](const Locations& A, const Locations& B) {
    return basis->induced_covariance(A, B);
  };
  const Matrix Phi = basis->features(X), Phis = basis->features(Xs);
  Vector mean;
  Matrix cov;
  oracle::posterior(Phi * Phi.transpose(), Phi * Phis.transpose(), Phis * Phis.transpose(), data.y,
                    noise, mean, cov);
  const auto lib = posterior_moments(induced, data, Xs);
  CHECK((lib.mean - mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((lib.covariance - cov).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(oracle::moment_z(eval_paths(post, Xs), mean, cov, 1e-10).max() <= 4.0);
}

TEST_CASE("weight_space_update: singular feature system without regularizer") {
  Rng rng(27);
  const auto basis = build_rff_basis(se(), 4, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Locations X = grid1(8);
  CHECK_THROWS_AS(weight_space_update(p, Dataset{X, Vector::Zero(8), 0.0}, 0.0), SolveFailure);
  CHECK_NOTHROW(weight_space_update(p, Dataset{X, Vector::Zero(8), 0.0}, 1e-3));
}

TEST_CASE("variance starvation: weight-space extrapolation is erratic") {
  Rng rng(28);
  const Kernel k = se(1, 0.02);
  const auto basis = build_rff_basis(k, 1000, rng);
  const Index n = 1000;
  const Locations X = grid1(n, 0.25, 0.75);
  const Dataset data = draw_dataset(k, X, 1e-5, rng);
  const auto priors = sample_prior_path(basis, 256, rng);
  const auto ws = weight_space_update(priors, data, data.noise_variance, &rng);
  const auto dec = gaussian_update(priors, data, DirectCholesky{}, rng);
  Locations G(100, 1);
  G << grid1(50, -0.25, 0.2), grid1(50, 0.8, 1.25);
  const Vector truth = posterior_moments(k, data, G).mean;
  const auto sup_mean_error = [&truth](const Matrix& F) {
    return (F.colwise().mean().transpose() - truth).cwiseAbs().maxCoeff();
  };
  const double err_ws = sup_mean_error(eval_paths(ws, G));
  const double err_dec = sup_mean_error(eval_paths(dec, G));
  MESSAGE("sup mean error weight-space " << err_ws << ", decoupled " << err_dec);
  // Empirical mean of 256 paths with unit prior variance: 4 standard errors.
  CHECK(err_dec < 4.0 / 16.0);
  CHECK(err_ws > 10.0 * err_dec);
}

// ---------------------------------------------------------------------------
// decoupled oracle

TEST_CASE("decoupled_posterior_covariance: exact prior reduces to the posterior") {
  Rng rng(29);
  const Kernel k(KernelFamily::Matern32, 1, 0.3, 1.0);
  const Dataset data = draw_dataset(k, grid1(5), 0.0, rng);
  const Locations Xs = grid1(9, -0.3, 1.3);
  const auto a = decoupled_posterior_covariance(as_covariance(k), k, data, Xs);
  const auto b = posterior_moments(k, data, Xs);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("decoupled_posterior_covariance: basis form, mean equality, two forms agree") {
  Rng rng(30);
  const Kernel k = se(1, 0.2);
  const auto basis = build_rff_basis(k, 64, rng);
  const Dataset data = draw_dataset(k, grid1(6), 0.0, rng);
  const Locations Xs = grid1(15, -0.3, 1.3);
  const CovarianceFunction induced = [&basis](const Locations& A, const Locations& B) {
    return basis->induced_covariance(A, B);
  };
  const auto a = decoupled_posterior_covariance(*basis, k, data, Xs);
  const auto b = decoupled_posterior_covariance(induced, k, data, Xs);
  const auto exact = posterior_moments(k, data, Xs);
  CHECK((a.mean - exact.mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.covariance - a.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("decoupled_posterior_covariance: delta prior never contracts") {
  Rng rng(31);
  const Kernel k = se(1, 0.3);
  const Kernel delta(KernelFamily::KroneckerDelta, 1, 1.0, 1.0);
  for (Index n : {2, 4, 8}) {
    const Locations X = grid1(n);
    const Dataset data{X, standard_normal(n, rng), 0.0};
    const Locations Xs = grid1(11, 0.03, 0.97);
    const auto m = decoupled_posterior_covariance(as_covariance(delta), k, data, Xs);
    const Matrix Kinv = oracle::inverse(k.eval(X));
    const Matrix Ksn = k.eval(Xs, X);
    const Matrix target = Matrix::Identity(11, 11) + Ksn * Kinv * Kinv * Ksn.transpose();
    CHECK((m.covariance - target).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((m.covariance.diagonal().array() >= 1.0).all());
  }
}

TEST_CASE("decoupled posterior variance contracts with RFF priors") {
  Rng rng(32);
  const Kernel k = se(1, 0.1);
  const auto basis = build_rff_basis(k, 2048, rng);
  const Locations G = grid1(512);
  double prev = 1e300;
  for (Index n : {4, 8, 16, 32, 64}) {
    const Dataset data{grid1(n), Vector::Zero(n), 0.0};
    const double sup = decoupled_posterior_covariance(*basis, k, data, G).covariance.diagonal().maxCoeff();
    MESSAGE("n = " << n << ": sup variance " << sup);
    CHECK(sup <= prev);
    prev = sup;
  }
  CHECK(prev < 1e-3);
}

// ---------------------------------------------------------------------------
// posterior paths

TEST_CASE("PosteriorPath: batch evaluation, update term, determinism, gradient") {
  Rng rng(33);
  const Kernel k(KernelFamily::Matern52, 2, 0.4, 1.0);
  const auto basis = build_rff_basis(k, 64, rng);
  const Locations X = oracle::uniform(10, 2, rng);
  const Dataset data{X, standard_normal(10, rng), 1e-2};
  auto posts = gaussian_update(sample_prior_path(basis, 3, rng), data, DirectCholesky{}, rng);
  posts.push_back(canonical_update(sample_prior_path(basis, 1, rng)[0],
                                   Dataset{X, data.y, 0.0}));
  const Locations G = oracle::uniform(25, 2, rng);
  const Matrix all = eval_paths(posts, G);
  for (std::size_t s = 0; s < posts.size(); ++s) {
    const Vector f = eval_path(posts[s], G);
    CHECK((all.row(static_cast<Index>(s)).transpose() - f).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f - eval_path(posts[s].prior(), G) - posts[s].evaluate_update(G)).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(eval_path(posts[s], G) == f);
  }
  const Vector x = (Vector(2) << 0.4, 0.6).finished();
  const Vector g = posts[0].gradient(x);
  const double h = 1e-6;
  for (Index i = 0; i < 2; ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fd =
        (eval_path(posts[0], xp.transpose())(0) - eval_path(posts[0], xm.transpose())(0)) / (2 * h);
    CHECK(std::abs(fd - g(i)) < 1e-5);
  }
}
