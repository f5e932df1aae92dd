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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pathwise/bench/sde.hpp"
#include "pathwise/bench/thompson.hpp"
#include "pathwise/conditioning.hpp"
#include "pathwise/linalg.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/prior.hpp"

using namespace pathwise;

namespace {

// Tolerances.
constexpr double kMaxZ = 4.0;                 // 1
constexpr double kRffSlope = -0.5;            // 2
constexpr double kRffSlopeTol = 0.15;         // 2
constexpr double kContractionBound = 1e-3;    // 3, times the kernel variance
constexpr double kDeltaTol = 1e-10;           // 4
constexpr double kLinearSlopeTol = 0.2;       // 5
constexpr double kCubicSlopeMin = 2.0;        // 5
constexpr double kSolverRelTol = 1e-6;        // 6
constexpr double kFloorFactor = 2.0;          // 7
constexpr double kSpeedup = 50.0;             // 7

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

template <typename F>
double min_time(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds(t0));
  }
  return best;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Locations stack(const Locations& A, const Locations& B) {
  Locations out(A.rows() + B.rows(), A.cols());
  out << A, B;
  return out;
}

std::vector<PriorPath> exact_paths(const Kernel& k, const Locations& X, const Locations& Xs,
                                   Index S, Rng& rng) {
  const Locations all = stack(X, Xs);
  return tabulate(all, sample_exact(k, all, S, rng));
}

std::shared_ptr<const ConditioningSystem> system_for(const Kernel& k, const Locations& C,
                                                     const Vector& noise) {
  return std::make_shared<const ConditioningSystem>(k, C, noise);
}

// Moments of ∫ p(f* | u) q(u) du with explicit inverses.
void nystrom(const Kernel& k, const Locations& Z, const Vector& mu, const Matrix& Sigma,
             const Locations& Xs, Vector& mean, Matrix& cov) {
  const Matrix A = oracle::inverse(k.eval(Z)) * k.eval(Z, Xs);
  mean = A.transpose() * mu;
  cov = k.eval(Xs) - k.eval(Xs, Z) * A + A.transpose() * Sigma * A;
}

// One point per cell of a regular partition of the unit cube along the
// first axis, uniform in the remaining coordinates.
Locations stratified(Index n, Index d, Rng& rng) {
  Locations X = oracle::uniform(n, d, rng);
  for (Index i = 0; i < n; ++i) X(i, 0) = (static_cast<double>(i) + 0.25 + 0.5 * X(i, 0)) / n;
  return X;
}

// 1 ---------------------------------------------------------------------------

Outcome moment_suite() {
  const Index S = 100000, n = 12, m = 6, n_test = 6;
  const double noise = 1e-2;
  double worst = 0.0;
  std::string worst_name;
  std::uint64_t seed = 100;
  for (const KernelFamily family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    for (const Index d : {1, 2}) {
      const Kernel k(family, d, 0.15, 1.0);
      Rng rng(seed++);
      const Locations X = stratified(n, d, rng);
      const Locations Xs = oracle::uniform(n_test, d, rng, -0.1, 1.1);
      const Locations Z = oracle::uniform(m, d, rng);
      const Vector f = sample_exact(k, X, 1, rng).row(0).transpose();
      const Vector y = f + std::sqrt(noise) * standard_normal(n, rng);
      const Matrix Knn = k.eval(X), Kns = k.eval(X, Xs), Kss = k.eval(Xs);

      const auto record = [&](const std::string& rule, const Matrix& draws, const Vector& mu,
                              const Matrix& cov) {
        const double z = oracle::moment_z(draws, mu, cov, 1e-10).max();
        if (z > worst) {
          worst = z;
          worst_name = rule + "/" + std::string(to_string(family)) + "/d" + std::to_string(d);
        }
      };

      Vector mu;
      Matrix cov;
      {  // canonical
        oracle::posterior(Knn, Kns, Kss, f, 0.0, mu, cov);
        const auto post = canonical_update(exact_paths(k, X, Xs, S, rng), Dataset{X, f, 0.0},
                                           system_for(k, X, Vector::Zero(n)));
        record("canonical", eval_paths(post, Xs), mu, cov);
      }
      oracle::posterior(Knn, Kns, Kss, y, noise, mu, cov);
      {  // gaussian
        const auto post = gaussian_update(exact_paths(k, X, Xs, S, rng), Dataset{X, y, noise},
                                          system_for(k, X, Vector::Constant(n, noise)), rng);
        record("gaussian", eval_paths(post, Xs), mu, cov);
      }
      {  // rank-1, one observation at a time
        const auto priors = exact_paths(k, X, Xs, S, rng);
        Matrix draws(S, n_test);
        for (Index s = 0; s < S; ++s) {
          PosteriorPath p = PosteriorPath::from_prior(priors[static_cast<std::size_t>(s)], k);
          for (Index i = 0; i < n; ++i) p = rank1_update(p, X.row(i).transpose(), y(i), noise, rng);
          draws.row(s) = eval_path(p, Xs).transpose();
        }
        record("rank-1", draws, mu, cov);
      }
      {  // sparse with q(u) = p(f(Z) | y)
        Vector qm;
        Matrix qc;
        oracle::posterior(Knn, k.eval(X, Z), k.eval(Z), y, noise, qm, qc);
        Vector sm;
        Matrix sc;
        nystrom(k, Z, qm, qc, Xs, sm, sc);
        const auto post = sparse_update(exact_paths(k, Z, Xs, S, rng),
                                        InducingModel{Z, InducingMoments{qm, qc}},
                                        system_for(k, Z, Vector::Zero(m)), rng);
        record("sparse", eval_paths(post, Xs), sm, sc);
      }
      {  // pseudo-data
        const double lambda = 0.05;
        const Vector yt = standard_normal(m, rng);
        Vector qm;
        Matrix qc;
        const Matrix Kzz = k.eval(Z);
        oracle::posterior(Kzz, Kzz, Kzz, yt, lambda, qm, qc);
        Vector sm;
        Matrix sc;
        nystrom(k, Z, qm, qc, Xs, sm, sc);
        const auto post = pseudo_data_update(
            exact_paths(k, Z, Xs, S, rng),
            InducingModel{Z, PseudoData{yt, Vector::Constant(m, lambda)}},
            system_for(k, Z, Vector::Constant(m, lambda)), rng);
        record("pseudo-data", eval_paths(post, Xs), sm, sc);
      }
      {  // weight-space, against the Bayesian linear model posterior
        const auto basis = build_rff_basis(k, 64, rng);
        const Matrix Phi = basis->features(X), Phis = basis->features(Xs);
        oracle::posterior(Phi * Phi.transpose(), Phi * Phis.transpose(), Phis * Phis.transpose(),
                          y, noise, mu, cov);
        const auto post =
            weight_space_update(sample_prior_path(basis, S, rng), Dataset{X, y, noise}, noise, &rng);
        record("weight-space", eval_paths(post, Xs), mu, cov);
      }
    }
  }
  return {worst <= kMaxZ, "max z " + fmt("%.3f", worst) + " (" + worst_name + ")"};
}

// 2 ---------------------------------------------------------------------------

Outcome rff_rate() {
  const Kernel k(KernelFamily::SquaredExponential, 1, 0.1, 1.0);
  const Locations grid = Vector::LinSpaced(64, 0.0, 1.0);
  std::vector<double> xs, ys;
  for (int p = 6; p <= 12; ++p) {
    std::vector<double> errs;
    for (std::uint64_t b = 0; b < 32; ++b) {
      Rng rng(2000 + b);
      errs.push_back(kernel_sup_error(k, *build_rff_basis(k, Index{1} << p, rng), grid));
    }
    xs.push_back(std::log(std::ldexp(1.0, p)));
    ys.push_back(std::log(median(errs)));
  }
  const double slope = oracle::ols_slope(xs, ys);
  return {std::abs(slope - kRffSlope) <= kRffSlopeTol, "slope " + fmt("%.3f", slope)};
}

// 3 ---------------------------------------------------------------------------

Outcome contraction() {
  Rng rng(3);
  const Kernel k(KernelFamily::SquaredExponential, 1, 0.1, 1.0);
  const auto basis = build_rff_basis(k, 2048, rng);
  const Locations G = Vector::LinSpaced(512, 0.0, 1.0);
  double prev = 1e300;
  bool monotone = true;
  std::ostringstream detail;
  detail << "sup var";
  for (const Index n : {4, 8, 16, 32, 64}) {
    const Locations X = Vector::LinSpaced(n, 0.0, 1.0);
    const Dataset data{X, Vector::Zero(n), 0.0};
    const double sup =
        decoupled_posterior_covariance(*basis, k, data, G).covariance.diagonal().maxCoeff();
    monotone = monotone && sup <= prev;
    prev = sup;
    detail << " " << fmt("%.2e", sup);
  }
  return {monotone && prev < kContractionBound * k.variance(), detail.str()};
}

// 4 ---------------------------------------------------------------------------

Outcome delta_counterexample() {
  const Kernel k(KernelFamily::SquaredExponential, 1, 0.1, 1.0);
  const Kernel delta(KernelFamily::KroneckerDelta, 1, 1.0, 1.0);
  const Locations Xs = Vector::LinSpaced(97, 0.003, 0.997);
  double min_var = 1e300, max_dev = 0.0;
  Rng rng(4);
  for (const Index n : {4, 8, 16, 32, 64}) {
    const Locations X = Vector::LinSpaced(n, 0.0, 1.0);
    const Dataset data{X, standard_normal(n, rng), 0.0};
    const auto m = decoupled_posterior_covariance(as_covariance(delta), k, data, Xs);
    min_var = std::min(min_var, m.covariance.diagonal().minCoeff());
    const Matrix xi = linalg::solve_psd(linalg::cholesky(k.eval(X)), k.eval(X, Xs));
    const Vector target = Vector::Ones(Xs.rows()) + xi.colwise().squaredNorm().transpose();
    max_dev = std::max(max_dev, ((m.covariance.diagonal() - target).array().abs() /
                                 target.array()).maxCoeff());
  }
  return {min_var >= delta.variance() - kDeltaTol && max_dev <= 1e-6,
          "min var " + fmt("%.12f", min_var) + ", rel dev from I + K*n Knn^-2 Kn* " +
              fmt("%.1e", max_dev)};
}

// 5 ---------------------------------------------------------------------------

Outcome linear_time() {
  Rng rng(5);
  const Kernel k(KernelFamily::Matern52, 2, 0.2, 1.0);
  const Index n = 256;
  const Locations X = oracle::uniform(n, 2, rng);
  const Dataset data{X, standard_normal(n, rng), 1e-2};
  const auto basis = build_rff_basis(k, 1024, rng);
  const PosteriorPath post = gaussian_update(sample_prior_path(basis, 1, rng)[0], data,
                                             SolverChoice{DirectCholesky{}}, rng);

  std::vector<double> xs, ys;
  for (int p = 8; p <= 14; ++p) {
    const Locations Xs = oracle::uniform(Index{1} << p, 2, rng);
    ys.push_back(std::log(min_time(5, [&] { (void)eval_path(post, Xs); })));
    xs.push_back(std::log(static_cast<double>(Xs.rows())));
  }
  const double path_slope = oracle::ols_slope(xs, ys);

  std::vector<double> xe, ye;
  for (int p = 8; p <= 12; ++p) {
    const Locations Xs = oracle::uniform(Index{1} << p, 2, rng);
    ye.push_back(std::log(min_time(p < 12 ? 3 : 1, [&] {
      const GaussianMoments mom = posterior_moments(k, data, Xs);
      const Matrix cov = mom.covariance + 1e-6 * Matrix::Identity(Xs.rows(), Xs.rows());
      const Matrix L = linalg::cholesky(cov).L;
      const Vector f = mom.mean + L * standard_normal(Xs.rows(), rng);
      (void)f;
    })));
    xe.push_back(std::log(static_cast<double>(Xs.rows())));
  }
  const double exact_slope = oracle::ols_slope(xe, ye);
  return {std::abs(path_slope - 1.0) <= kLinearSlopeTol && exact_slope >= kCubicSlopeMin,
          "pathwise slope " + fmt("%.3f", path_slope) + ", location-scale slope " +
              fmt("%.3f", exact_slope)};
}

// 6 ---------------------------------------------------------------------------

Outcome solver_equivalence() {
  Rng rng(6);
  const Kernel k(KernelFamily::Matern32, 2, 0.3, 1.0);
  const auto basis = build_rff_basis(k, 512, rng);
  const PriorPath p = sample_prior_path(basis, 1, rng)[0];
  const Index n = 512;
  const Locations X = oracle::uniform(n, 2, rng);
  const Dataset data{X, standard_normal(n, rng), 1e-2};
  Rng r1(61), r2(61), r3(61);
  const auto direct = gaussian_update(p, data, DirectCholesky{}, r1);
  const auto pcg = gaussian_update(p, data, ConjugateGradients{1e-12, 0, 32}, r2);
  const auto cg = gaussian_update(p, data, ConjugateGradients{1e-12, 0, 0}, r3);
  const double rel = (direct.coefficients() - pcg.coefficients()).norm() /
                     direct.coefficients().norm();
  const double rel_plain = (direct.coefficients() - cg.coefficients()).norm() /
                           direct.coefficients().norm();
  const Index it_pcg = pcg.solve_report()->iterations, it_cg = cg.solve_report()->iterations;
  const bool pass = pcg.solve_report()->converged && cg.solve_report()->converged &&
                    rel <= kSolverRelTol && rel_plain <= kSolverRelTol && it_pcg <= it_cg;
  return {pass, "rel diff " + fmt("%.2e", std::max(rel, rel_plain)) + ", iterations " +
                    std::to_string(it_pcg) + " preconditioned vs " + std::to_string(it_cg)};
}

// 7 ---------------------------------------------------------------------------

Outcome sde_equivalence() {
  using namespace bench;
  SdeExperimentConfig cfg;
  cfg.modes = {SdeMode::Pathwise, SdeMode::Exact, SdeMode::ExactReference};
  cfg.seed = 1;
  const SdeResult r = run_sde(cfg);
  bool pass = true;
  std::ostringstream detail;
  for (const Index t : cfg.record_steps) {
    const double d = r.distance(SdeMode::Pathwise, SdeMode::Exact, t);
    const double floor = r.distance(SdeMode::Exact, SdeMode::ExactReference, t);
    pass = pass && d <= kFloorFactor * floor;
    detail << "t=" << t << ": " << fmt("%.3f", d) << "/" << fmt("%.3f", floor) << "; ";
  }
  for (const auto& dist : r.distances)
    if (!dist.converged) detail << "(unconverged sinkhorn at t=" << dist.step << ") ";
  const double speedup = r.mode(SdeMode::Exact).wall_time / r.mode(SdeMode::Pathwise).wall_time;
  pass = pass && speedup >= kSpeedup;
  detail << "speedup " << fmt("%.1f", speedup) << "x";
  return {pass, detail.str()};
}

// 8 ---------------------------------------------------------------------------

Outcome thompson_sanity() {
  using namespace bench;
  ThompsonConfig cfg;
  cfg.strategies = {ThompsonStrategy::Decoupled, ThompsonStrategy::Random};
  cfg.seed = 8;
  const auto rows = run_thompson(cfg);
  const Index last = cfg.rounds - 1;
  const double ts = median_best_value(rows, ThompsonStrategy::Decoupled, last);
  const double rs = median_best_value(rows, ThompsonStrategy::Random, last);
  return {ts < rs, "median best " + fmt("%.4f", ts) + " (decoupled) vs " + fmt("%.4f", rs) +
                       " (random)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"moment-matching oracle suite", moment_suite},
      {"RFF error rate", rff_rate},
      {"decoupled posterior contraction", contraction},
      {"delta-kernel counterexample", delta_counterexample},
      {"linear-time sampling", linear_time},
      {"solver equivalence", solver_equivalence},
      {"SDE strategy equivalence", sde_equivalence},
      {"Thompson sanity", thompson_sanity},
  };
  int failures = 0;
  // Optional arguments select criteria by number.
  std::vector<bool> run(criteria.size(), argc < 2);
  for (int a = 1; a < argc; ++a) {
    const std::size_t c = std::strtoul(argv[a], nullptr, 10);
    if (c >= 1 && c <= criteria.size()) run[c - 1] = true;
  }
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!run[i]) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu: %s  %s: %s [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str(), seconds(t0));
  }
  return failures == 0 ? 0 : 1;
}
