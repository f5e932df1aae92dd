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


#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "pathwise/conditioning.hpp"
#include "pathwise/linalg.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/prior.hpp"

namespace {

using namespace pathwise;

Locations uniform(Index n, Index d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Locations X(n, d);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  return X;
}

void BM_RffFeatures(benchmark::State& state) {
  Rng rng(1);
  const Kernel k(KernelFamily::SquaredExponential, 2, 0.2, 1.0);
  const auto basis = build_rff_basis(k, state.range(0), rng);
  const Locations X = uniform(1024, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(basis->features(X));
  state.SetItemsProcessed(state.iterations() * X.rows() * state.range(0));
}
BENCHMARK(BM_RffFeatures)->RangeMultiplier(4)->Range(64, 4096);

void BM_KernelMatrix(benchmark::State& state) {
  Rng rng(2);
  const Kernel k(KernelFamily::Matern52, 2, 0.2, 1.0);
  const Locations X = uniform(state.range(0), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(k.eval(X));
}
BENCHMARK(BM_KernelMatrix)->RangeMultiplier(4)->Range(64, 1024);

void BM_PosteriorEval(benchmark::State& state) {
  Rng rng(3);
  const Kernel k(KernelFamily::Matern52, 2, 0.2, 1.0);
  const Locations X = uniform(256, 2, rng);
  const Dataset data{X, standard_normal(256, rng), 1e-2};
  const auto basis = build_rff_basis(k, 1024, rng);
  const PosteriorPath post = gaussian_update(sample_prior_path(basis, 1, rng)[0], data,
                                             SolverChoice{DirectCholesky{}}, rng);
  const Locations Xs = uniform(state.range(0), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(eval_path(post, Xs));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PosteriorEval)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN);

void BM_Cholesky(benchmark::State& state) {
  Rng rng(4);
  const Kernel k(KernelFamily::Matern32, 2, 0.2, 1.0);
  Matrix A = k.eval(uniform(state.range(0), 2, rng));
  A.diagonal().array() += 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(linalg::cholesky(A));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Cholesky)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNCubed);

void BM_ConjugateGradients(benchmark::State& state) {
  Rng rng(5);
  const Kernel k(KernelFamily::Matern32, 2, 0.2, 1.0);
  const Index n = 1024;
  Matrix A = k.eval(uniform(n, 2, rng));
  const double noise = 1e-2;
  A.diagonal().array() += noise;
  const Vector b = standard_normal(n, rng);
  const linalg::LinearOperator op = [&](const Vector& v) -> Vector { return A * v; };
  const Index rank = state.range(0);
  std::unique_ptr<linalg::LowRankPreconditioner> pre;
  if (rank > 0) {
    Matrix K = A;
    K.diagonal().array() -= noise;
    pre = std::make_unique<linalg::LowRankPreconditioner>(linalg::pivoted_cholesky(K, rank), noise);
  }
  Index iterations = 0;
  for (auto _ : state) {
    auto [x, report] = linalg::cg_solve(op, b, pre.get(), {1e-8, 0});
    benchmark::DoNotOptimize(x);
    iterations = report.iterations;
  }
  state.counters["cg_iterations"] = static_cast<double>(iterations);
}
BENCHMARK(BM_ConjugateGradients)->Arg(0)->Arg(16)->Arg(64);

void BM_Sinkhorn(benchmark::State& state) {
  Rng rng(6);
  const Index S = state.range(0);
  const Matrix a = standard_normal(S, 2, rng);
  const Matrix b = (standard_normal(S, 2, rng).array() + 0.5).matrix();
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn_distance(a, b, 1e-2));
}
BENCHMARK(BM_Sinkhorn)->RangeMultiplier(2)->Range(256, 1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
