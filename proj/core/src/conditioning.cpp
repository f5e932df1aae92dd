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

#include "pathwise/conditioning.hpp"

#include <cmath>
#include <string>

namespace pathwise {

namespace {

std::shared_ptr<const ConditioningSystem> make_system(const Kernel& kernel, const Locations& centers,
                                                      const Vector& noise,
                                                      const SolverChoice& solver) {
  return std::make_shared<const ConditioningSystem>(kernel, centers, noise, solver);
}

Matrix covariance_root(const Matrix& cov) {
  if (cov.size() == 0) return cov;
  try {
    return linalg::cholesky(cov).L;
  } catch (const NotPositiveDefinite&) {
    return linalg::psd_sqrt(cov);
  }
}

Vector scaled_normal(const Vector& variances, Rng& rng) {
  return standard_normal(variances.size(), rng).cwiseProduct(variances.cwiseSqrt());
}

void require_dim(const PriorPath& path, const Kernel& kernel, const char* who) {
  if (path.dim() != kernel.dim())
    throw InvalidArgument(std::string(who) + ": path and kernel dimensions differ");
}

const InducingMoments& moments_of(const InducingModel& inducing, const char* who) {
  const auto* m = std::get_if<InducingMoments>(&inducing.parameters);
  if (!m) throw InvalidArgument(std::string(who) + ": requires the moments parameterization");
  return *m;
}

const PseudoData& pseudo_of(const InducingModel& inducing, const char* who) {
  const auto* p = std::get_if<PseudoData>(&inducing.parameters);
  if (!p) throw InvalidArgument(std::string(who) + ": requires the pseudo-data parameterization");
  return *p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Data types

void Dataset::validate(Index dim) const {
  if (X.rows() > 0 && X.cols() != dim)
    throw InvalidArgument("Dataset: location dimension does not match");
  if (y.size() != X.rows()) throw InvalidArgument("Dataset: observation count does not match locations");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw InvalidArgument("Dataset: noise variance must be nonnegative");
}

void InducingModel::validate(Index dim) const {
  if (Z.rows() < 1) throw InvalidArgument("InducingModel: need at least one inducing location");
  if (Z.cols() != dim) throw InvalidArgument("InducingModel: location dimension does not match");
  const Index m = Z.rows();
  if (const auto* mom = std::get_if<InducingMoments>(&parameters)) {
    if (mom->mean.size() != m || mom->covariance.rows() != m || mom->covariance.cols() != m)
      throw InvalidArgument("InducingModel: moment shapes do not match inducing locations");
    const double scale = std::max(1.0, mom->covariance.cwiseAbs().maxCoeff());
    if ((mom->covariance - mom->covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw InvalidArgument("InducingModel: covariance is not symmetric");
  } else {
    const auto& pd = std::get<PseudoData>(parameters);
    if (pd.targets.size() != m || pd.noise_variances.size() != m)
      throw InvalidArgument("InducingModel: pseudo-data shapes do not match inducing locations");
    if (!(pd.noise_variances.array() > 0.0).all())
      throw InvalidArgument("InducingModel: pseudo-noise variances must be strictly positive");
  }
}

CovarianceFunction as_covariance(const Kernel& kernel) {
  return [kernel](const Locations& X, const Locations& Y) { return kernel.eval(X, Y); };
}

// ---------------------------------------------------------------------------
// ConditioningSystem

ConditioningSystem::ConditioningSystem(Kernel kernel, Locations centers, Vector center_noise,
                                       SolverChoice solver)
    : kernel_(std::move(kernel)),
      centers_(std::move(centers)),
      center_noise_(std::move(center_noise)),
      solver_(std::move(solver)) {
  check_centers();
  if (size() == 0) {
    std::call_once(factor_once_, [&] { factor_ = linalg::CholeskyFactor{Matrix(0, 0), 0.0}; });
    return;
  }
  if (std::holds_alternative<DirectCholesky>(solver_)) return;
  const auto& cg = std::get<ConjugateGradients>(solver_);
  if (!(cg.tol > 0.0) || cg.max_iter < 0 || cg.precond_rank < 0)
    throw InvalidArgument("ConditioningSystem: CG parameters must be positive");
  matrix_ = system_matrix();
  if (cg.precond_rank > 0 && (center_noise_.array() > 0.0).all()) {
    const Matrix K = kernel_.eval(centers_);
    precond_.emplace(linalg::pivoted_cholesky(K, std::min(cg.precond_rank, size())), center_noise_);
  }
}

ConditioningSystem::ConditioningSystem(Kernel kernel, Locations centers, Vector center_noise,
                                       linalg::CholeskyFactor factor)
    : kernel_(std::move(kernel)),
      centers_(std::move(centers)),
      center_noise_(std::move(center_noise)),
      solver_(DirectCholesky{}) {
  check_centers();
  if (factor.size() != size()) throw InvalidArgument("ConditioningSystem: factor size mismatch");
  std::call_once(factor_once_, [&] { factor_ = std::move(factor); });
}

void ConditioningSystem::check_centers() const {
  if (centers_.rows() > 0 && centers_.cols() != kernel_.dim())
    throw InvalidArgument("ConditioningSystem: center dimension does not match kernel");
  if (center_noise_.size() != centers_.rows())
    throw InvalidArgument("ConditioningSystem: one noise variance per center required");
  if (!(center_noise_.array() >= 0.0).all())
    throw InvalidArgument("ConditioningSystem: noise variances must be nonnegative");
  // Two noise-free conditions at one location are inconsistent (or redundant).
  std::vector<Index> exact;
  for (Index i = 0; i < centers_.rows(); ++i)
    if (center_noise_(i) == 0.0) exact.push_back(i);
  if (exact.size() > 1) {
    Locations sub(static_cast<Index>(exact.size()), centers_.cols());
    for (std::size_t r = 0; r < exact.size(); ++r) sub.row(static_cast<Index>(r)) = centers_.row(exact[r]);
    const TabulatedSupport seen(sub);
    for (Index r = 0; r < sub.rows(); ++r)
      if (seen.find(sub.row(r).transpose()) != r)
        throw SolveFailure("ConditioningSystem: duplicated noise-free center at row " +
                           std::to_string(exact[static_cast<std::size_t>(r)]) +
                           "; add noise (jitter) or remove the duplicate");
  }
}

Matrix ConditioningSystem::system_matrix() const {
  Matrix A = kernel_.eval(centers_);
  A.diagonal() += center_noise_;
  return A;
}

const linalg::CholeskyFactor& ConditioningSystem::factor() const {
  std::call_once(factor_once_, [&] { factor_ = linalg::cholesky(system_matrix()); });
  return *factor_;
}

std::pair<Vector, std::optional<linalg::CgReport>> ConditioningSystem::solve(
    const Vector& rhs) const {
  if (rhs.size() != size()) throw InvalidArgument("ConditioningSystem::solve: size mismatch");
  if (size() == 0) return {Vector(0), std::nullopt};
  if (matrix_) {
    const auto& cg = std::get<ConjugateGradients>(solver_);
    const Matrix& A = *matrix_;
    auto [v, report] = linalg::cg_solve([&A](const Vector& x) { return Vector(A * x); }, rhs,
                                        precond_ ? &*precond_ : nullptr,
                                        linalg::CgOptions{cg.tol, cg.max_iter});
    if (!v.allFinite()) throw SolveFailure("ConditioningSystem: CG produced a non-finite solution");
    return {std::move(v), report};
  }
  Vector v = linalg::solve_psd(factor(), rhs);
  if (!v.allFinite()) throw SolveFailure("ConditioningSystem: solve produced a non-finite solution");
  return {std::move(v), std::nullopt};
}

std::pair<Matrix, std::vector<linalg::CgReport>> ConditioningSystem::solve(
    const Matrix& rhs) const {
  if (rhs.rows() != size()) throw InvalidArgument("ConditioningSystem::solve: size mismatch");
  if (size() == 0 || rhs.cols() == 0) return {Matrix(size(), rhs.cols()), {}};
  if (matrix_) {
    const auto& cg = std::get<ConjugateGradients>(solver_);
    const Matrix& A = *matrix_;
    auto [V, reports] = linalg::cg_solve([&A](const Vector& x) { return Vector(A * x); }, rhs,
                                         precond_ ? &*precond_ : nullptr,
                                         linalg::CgOptions{cg.tol, cg.max_iter});
    if (!V.allFinite()) throw SolveFailure("ConditioningSystem: CG produced a non-finite solution");
    return {std::move(V), std::move(reports)};
  }
  Matrix V = linalg::solve_psd(factor(), rhs);
  if (!V.allFinite()) throw SolveFailure("ConditioningSystem: solve produced a non-finite solution");
  return {std::move(V), {}};
}

std::shared_ptr<const ConditioningSystem> ConditioningSystem::append(
    const Eigen::Ref<const Vector>& x, double noise) const {
  if (x.size() != kernel_.dim()) throw InvalidArgument("ConditioningSystem::append: dimension mismatch");
  if (!(noise >= 0.0)) throw InvalidArgument("ConditioningSystem::append: negative noise");
  const Locations xr = x.transpose();
  const Vector cross = size() > 0 ? Vector(kernel_.eval(centers_, xr).col(0)) : Vector(0);
  linalg::CholeskyFactor extended;
  try {
    extended = linalg::cholesky_append(factor(), cross, kernel_.variance() + noise);
  } catch (const NotPositiveDefinite& e) {
    throw SolveFailure(std::string("rank-1 extension failed: ") + e.what());
  }
  Locations centers(size() + 1, kernel_.dim());
  centers.topRows(size()) = centers_;
  centers.row(size()) = xr;
  Vector noise_vec(size() + 1);
  noise_vec.head(size()) = center_noise_;
  noise_vec(size()) = noise;
  return std::make_shared<const ConditioningSystem>(kernel_, std::move(centers),
                                                    std::move(noise_vec), std::move(extended));
}

// ---------------------------------------------------------------------------
// PosteriorPath

PosteriorPath PosteriorPath::from_prior(PriorPath prior, const Kernel& kernel) {
  require_dim(prior, kernel, "PosteriorPath::from_prior");
  auto system = make_system(kernel, Locations(0, kernel.dim()), Vector(0), DirectCholesky{});
  return PosteriorPath(std::move(prior), std::move(system), Vector(0), Vector(0), Vector(0));
}

PosteriorPath::PosteriorPath(PriorPath prior, std::shared_ptr<const ConditioningSystem> system,
                             Vector targets, Vector noise_draws, Vector coefficients,
                             std::optional<linalg::CgReport> report)
    : prior_(std::move(prior)),
      system_(std::move(system)),
      targets_(std::move(targets)),
      noise_draws_(std::move(noise_draws)),
      coefficients_(std::move(coefficients)),
      report_(report) {
  if (!system_) throw InvalidArgument("PosteriorPath: null conditioning system");
  require_dim(prior_, system_->kernel(), "PosteriorPath");
  const Index n = system_->size();
  if (targets_.size() != n || noise_draws_.size() != n || coefficients_.size() != n)
    throw InvalidArgument("PosteriorPath: targets, noise draws and coefficients must match centers");
  if (!coefficients_.allFinite()) throw SolveFailure("PosteriorPath: coefficients are not finite");
}

Vector PosteriorPath::evaluate_update(const Locations& X) const {
  if (system_->size() == 0 || X.rows() == 0) return Vector::Zero(X.rows());
  return kernel().eval(X, centers()) * coefficients_;
}

Vector PosteriorPath::evaluate(const Locations& X) const {
  Vector out = prior_.evaluate(X);
  if (system_->size() > 0 && X.rows() > 0) out.noalias() += kernel().eval(X, centers()) * coefficients_;
  return out;
}

Vector PosteriorPath::gradient(const Eigen::Ref<const Vector>& x) const {
  Vector g = prior_.gradient(x);
  if (system_->size() > 0) g.noalias() += kernel().gradient(x, centers()) * coefficients_;
  return g;
}

Vector eval_path(const PosteriorPath& path, const Locations& X) { return path.evaluate(X); }

Matrix eval_paths(const std::vector<PosteriorPath>& paths, const Locations& X) {
  std::vector<PriorPath> priors;
  priors.reserve(paths.size());
  for (const auto& p : paths) priors.push_back(p.prior());
  Matrix out = eval_paths(priors, X);
  if (X.rows() == 0) return out;
  const std::size_t S = paths.size();
  std::size_t s = 0;
  while (s < S) {
    const auto& system = paths[s].system();
    std::size_t e = s + 1;
    while (e < S && paths[e].system() == system) ++e;
    if (system->size() > 0) {
      Matrix V(system->size(), static_cast<Index>(e - s));
      for (std::size_t k = s; k < e; ++k) V.col(static_cast<Index>(k - s)) = paths[k].coefficients();
      out.middleRows(static_cast<Index>(s), V.cols()).noalias() +=
          V.transpose() * system->kernel().eval(X, system->centers()).transpose();
    }
    s = e;
  }
  return out;
}

PosteriorPath pathwise_update(const PriorPath& path,
                              const std::shared_ptr<const ConditioningSystem>& system,
                              const Vector& targets, const Vector& noise_draws) {
  if (!system) throw InvalidArgument("pathwise_update: null system");
  require_dim(path, system->kernel(), "pathwise_update");
  if (targets.size() != system->size() || noise_draws.size() != system->size())
    throw InvalidArgument("pathwise_update: targets and noise draws must match the system size");
  const Vector residual = targets - path.evaluate(system->centers()) - noise_draws;
  auto [v, report] = system->solve(residual);
  return PosteriorPath(path, system, targets, noise_draws, std::move(v), report);
}

std::vector<PosteriorPath> pathwise_update(const std::vector<PriorPath>& paths,
                                           const std::shared_ptr<const ConditioningSystem>& system,
                                           const Matrix& targets, const Matrix& noise_draws) {
  if (!system) throw InvalidArgument("pathwise_update: null system");
  const Index S = static_cast<Index>(paths.size());
  if (targets.rows() != system->size() || noise_draws.rows() != system->size() ||
      targets.cols() != S || noise_draws.cols() != S)
    throw InvalidArgument("pathwise_update: targets and noise draws must be n x paths");
  for (const auto& p : paths) require_dim(p, system->kernel(), "pathwise_update");
  const Matrix residual =
      targets - eval_paths(paths, system->centers()).transpose() - noise_draws;
  auto [V, reports] = system->solve(residual);
  std::vector<PosteriorPath> out;
  out.reserve(paths.size());
  for (Index s = 0; s < S; ++s) {
    std::optional<linalg::CgReport> report;
    if (!reports.empty()) report = reports[static_cast<std::size_t>(s)];
    out.emplace_back(paths[static_cast<std::size_t>(s)], system, targets.col(s),
                     noise_draws.col(s), V.col(s), report);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Update rules

Vector matheron_finite(const Vector& a_sample, const Vector& b_sample, const Vector& beta,
                       const Matrix& cov_ab, const Matrix& cov_bb) {
  if (b_sample.size() != beta.size() || cov_bb.rows() != beta.size() ||
      cov_bb.cols() != beta.size() || cov_ab.rows() != a_sample.size() ||
      cov_ab.cols() != beta.size())
    throw InvalidArgument("matheron_finite: shapes do not conform");
  linalg::CholeskyFactor factor;
  try {
    factor = linalg::cholesky(cov_bb);
  } catch (const NotPositiveDefinite& e) {
    throw SolveFailure(std::string("matheron_finite: ") + e.what());
  }
  return a_sample + cov_ab * linalg::solve_psd(factor, Vector(beta - b_sample));
}

namespace {

void check_canonical(const PriorPath& path, const Dataset& data) {
  data.validate(path.dim());
  if (data.noise_variance != 0.0)
    throw InvalidArgument("canonical_update: requires noise-free data (noise_variance == 0)");
}

void check_gaussian(const PriorPath& path, const Dataset& data, const char* who) {
  data.validate(path.dim());
  if (!(data.noise_variance > 0.0))
    throw InvalidArgument(std::string(who) + ": requires noise_variance > 0");
}

std::shared_ptr<const ConditioningSystem> data_system(const Kernel& kernel, const Dataset& data,
                                                      const SolverChoice& solver) {
  try {
    auto system =
        make_system(kernel, data.X, Vector::Constant(data.size(), data.noise_variance), solver);
    if (std::holds_alternative<DirectCholesky>(solver)) system->factor();
    return system;
  } catch (const NotPositiveDefinite& e) {
    throw SolveFailure(std::string(e.what()) +
                       " (near-duplicate training points; consider noise or jitter)");
  }
}

Kernel kernel_of(const PriorPath& path) {
  if (path.is_weight_space())
    if (const auto* rff = dynamic_cast<const FourierFeatureMap*>(path.basis().get()))
      return rff->kernel();
  throw InvalidArgument(
      "update: the prior path does not carry a kernel; pass a prepared ConditioningSystem");
}

}  // namespace

PosteriorPath canonical_update(const PriorPath& path, const Dataset& data,
                               const SolverChoice& solver) {
  check_canonical(path, data);
  return pathwise_update(path, data_system(kernel_of(path), data, solver), data.y,
                         Vector::Zero(data.size()));
}

PosteriorPath canonical_update(const PriorPath& path, const Dataset& data,
                               const std::shared_ptr<const ConditioningSystem>& system) {
  check_canonical(path, data);
  if (!system || system->size() != data.size())
    throw InvalidArgument("canonical_update: system does not match the dataset");
  if ((system->center_noise().array() != 0.0).any())
    throw InvalidArgument("canonical_update: system carries noise");
  return pathwise_update(path, system, data.y, Vector::Zero(data.size()));
}

std::vector<PosteriorPath> canonical_update(
    const std::vector<PriorPath>& paths, const Dataset& data,
    const std::shared_ptr<const ConditioningSystem>& system) {
  if (paths.empty()) return {};
  check_canonical(paths.front(), data);
  if (!system || system->size() != data.size())
    throw InvalidArgument("canonical_update: system does not match the dataset");
  if ((system->center_noise().array() != 0.0).any())
    throw InvalidArgument("canonical_update: system carries noise");
  const Index S = static_cast<Index>(paths.size());
  return pathwise_update(paths, system, data.y.replicate(1, S), Matrix::Zero(data.size(), S));
}

std::vector<PosteriorPath> canonical_update(const std::vector<PriorPath>& paths,
                                            const Dataset& data, const SolverChoice& solver) {
  if (paths.empty()) return {};
  check_canonical(paths.front(), data);
  return canonical_update(paths, data, data_system(kernel_of(paths.front()), data, solver));
}

PosteriorPath gaussian_update(const PriorPath& path, const Dataset& data,
                              const std::shared_ptr<const ConditioningSystem>& system, Rng& rng) {
  check_gaussian(path, data, "gaussian_update");
  if (!system || system->size() != data.size())
    throw InvalidArgument("gaussian_update: system does not match the dataset");
  const Vector eps = std::sqrt(data.noise_variance) * standard_normal(data.size(), rng);
  return pathwise_update(path, system, data.y, eps);
}

PosteriorPath gaussian_update(const PriorPath& path, const Dataset& data,
                              const SolverChoice& solver, Rng& rng) {
  check_gaussian(path, data, "gaussian_update");
  return gaussian_update(path, data, data_system(kernel_of(path), data, solver), rng);
}

std::vector<PosteriorPath> gaussian_update(
    const std::vector<PriorPath>& paths, const Dataset& data,
    const std::shared_ptr<const ConditioningSystem>& system, Rng& rng) {
  if (paths.empty()) return {};
  check_gaussian(paths.front(), data, "gaussian_update");
  if (!system || system->size() != data.size())
    throw InvalidArgument("gaussian_update: system does not match the dataset");
  const Index S = static_cast<Index>(paths.size());
  const Matrix eps = std::sqrt(data.noise_variance) * standard_normal(data.size(), S, rng);
  return pathwise_update(paths, system, data.y.replicate(1, S), eps);
}

std::vector<PosteriorPath> gaussian_update(const std::vector<PriorPath>& paths,
                                           const Dataset& data, const SolverChoice& solver,
                                           Rng& rng) {
  if (paths.empty()) return {};
  check_gaussian(paths.front(), data, "gaussian_update");
  return gaussian_update(paths, data, data_system(kernel_of(paths.front()), data, solver), rng);
}

namespace {

std::shared_ptr<const ConditioningSystem> inducing_system(const Kernel& kernel,
                                                          const InducingModel& inducing,
                                                          const SolverChoice& solver) {
  Vector noise = Vector::Zero(inducing.size());
  if (const auto* pd = std::get_if<PseudoData>(&inducing.parameters)) noise = pd->noise_variances;
  try {
    auto system = make_system(kernel, inducing.Z, noise, solver);
    if (std::holds_alternative<DirectCholesky>(solver)) system->factor();
    return system;
  } catch (const NotPositiveDefinite& e) {
    throw SolveFailure(std::string("inducing system: ") + e.what());
  }
}

PosteriorPath sparse_with_root(const PriorPath& path, const InducingMoments& q, const Matrix& root,
                               const std::shared_ptr<const ConditioningSystem>& system, Rng& rng) {
  const Vector u = q.mean + root * standard_normal(q.mean.size(), rng);
  return pathwise_update(path, system, u, Vector::Zero(u.size()));
}

}  // namespace

PosteriorPath sparse_update(const PriorPath& path, const InducingModel& inducing,
                            const std::shared_ptr<const ConditioningSystem>& system, Rng& rng) {
  inducing.validate(path.dim());
  const auto& q = moments_of(inducing, "sparse_update");
  if (!system || system->size() != inducing.size())
    throw InvalidArgument("sparse_update: system does not match the inducing model");
  return sparse_with_root(path, q, covariance_root(q.covariance), system, rng);
}

PosteriorPath sparse_update(const PriorPath& path, const InducingModel& inducing,
                            const SolverChoice& solver, Rng& rng) {
  inducing.validate(path.dim());
  moments_of(inducing, "sparse_update");
  return sparse_update(path, inducing, inducing_system(kernel_of(path), inducing, solver), rng);
}

std::vector<PosteriorPath> sparse_update(
    const std::vector<PriorPath>& paths, const InducingModel& inducing,
    const std::shared_ptr<const ConditioningSystem>& system, Rng& rng) {
  if (paths.empty()) return {};
  inducing.validate(paths.front().dim());
  const auto& q = moments_of(inducing, "sparse_update");
  if (!system || system->size() != inducing.size())
    throw InvalidArgument("sparse_update: system does not match the inducing model");
  const Index S = static_cast<Index>(paths.size());
  const Matrix U = (covariance_root(q.covariance) * standard_normal(inducing.size(), S, rng))
                       .colwise() + q.mean;
  return pathwise_update(paths, system, U, Matrix::Zero(inducing.size(), S));
}

std::vector<PosteriorPath> sparse_update(const std::vector<PriorPath>& paths,
                                         const InducingModel& inducing,
                                         const SolverChoice& solver, Rng& rng) {
  if (paths.empty()) return {};
  inducing.validate(paths.front().dim());
  moments_of(inducing, "sparse_update");
  return sparse_update(paths, inducing,
                       inducing_system(kernel_of(paths.front()), inducing, solver), rng);
}

PosteriorPath pseudo_data_update(const PriorPath& path, const InducingModel& inducing,
                                 const std::shared_ptr<const ConditioningSystem>& system,
                                 Rng& rng) {
  inducing.validate(path.dim());
  const auto& pd = pseudo_of(inducing, "pseudo_data_update");
  if (!system || system->size() != inducing.size())
    throw InvalidArgument("pseudo_data_update: system does not match the inducing model");
  return pathwise_update(path, system, pd.targets, scaled_normal(pd.noise_variances, rng));
}

PosteriorPath pseudo_data_update(const PriorPath& path, const InducingModel& inducing,
                                 const SolverChoice& solver, Rng& rng) {
  inducing.validate(path.dim());
  pseudo_of(inducing, "pseudo_data_update");
  return pseudo_data_update(path, inducing, inducing_system(kernel_of(path), inducing, solver), rng);
}

std::vector<PosteriorPath> pseudo_data_update(
    const std::vector<PriorPath>& paths, const InducingModel& inducing,
    const std::shared_ptr<const ConditioningSystem>& system, Rng& rng) {
  if (paths.empty()) return {};
  inducing.validate(paths.front().dim());
  const auto& pd = pseudo_of(inducing, "pseudo_data_update");
  if (!system || system->size() != inducing.size())
    throw InvalidArgument("pseudo_data_update: system does not match the inducing model");
  const Index S = static_cast<Index>(paths.size());
  const Matrix eps = pd.noise_variances.cwiseSqrt().asDiagonal() *
                     standard_normal(inducing.size(), S, rng);
  return pathwise_update(paths, system, pd.targets.replicate(1, S), eps);
}

std::vector<PosteriorPath> pseudo_data_update(const std::vector<PriorPath>& paths,
                                              const InducingModel& inducing,
                                              const SolverChoice& solver, Rng& rng) {
  if (paths.empty()) return {};
  inducing.validate(paths.front().dim());
  pseudo_of(inducing, "pseudo_data_update");
  return pseudo_data_update(paths, inducing,
                            inducing_system(kernel_of(paths.front()), inducing, solver), rng);
}

PosteriorPath rank1_update(const PosteriorPath& post, const Eigen::Ref<const Vector>& new_point,
                           double new_value, double noise_variance, double noise_draw) {
  if (!(noise_variance >= 0.0)) throw InvalidArgument("rank1_update: negative noise variance");
  if (noise_variance == 0.0 && noise_draw != 0.0)
    throw InvalidArgument("rank1_update: noise-free condition with a nonzero noise draw");
  const auto& system = post.system();
  if (noise_variance == 0.0 && new_point.size() == system->centers().cols())
    for (Index j = 0; j < system->size(); ++j)
      if (system->center_noise()(j) == 0.0 &&
          system->centers().row(j).transpose() == new_point)
        throw InvalidArgument("rank1_update: noise-free condition duplicates center " +
                              std::to_string(j));
  const auto extended = system->append(new_point, noise_variance);
  const Index n = system->size();
  Vector targets(n + 1), noise(n + 1);
  targets << post.targets(), new_value;
  noise << post.noise_draws(), noise_draw;
  return pathwise_update(post.prior(), extended, targets, noise);
}

PosteriorPath rank1_update(const PosteriorPath& post, const Eigen::Ref<const Vector>& new_point,
                           double new_value, double noise_variance, Rng& rng) {
  const double eps =
      noise_variance > 0.0 ? std::sqrt(noise_variance) * standard_normal(1, rng)(0) : 0.0;
  return rank1_update(post, new_point, new_value, noise_variance, eps);
}

namespace {

struct WeightSpaceSystem {
  Matrix PhiS;  // Φ Σ_w, n x ℓ
  linalg::CholeskyFactor factor;
};

WeightSpaceSystem weight_space_system(const FeatureBasis& basis, const Dataset& data,
                                      double regularizer) {
  WeightSpaceSystem out;
  const Matrix Phi = basis.features(data.X);
  out.PhiS = Phi * basis.weight_variances().asDiagonal();
  Matrix A = out.PhiS * Phi.transpose();
  A.diagonal().array() += regularizer;
  try {
    out.factor = linalg::cholesky(A, regularizer > 0.0 ? 1e-6 : 0.0);
  } catch (const NotPositiveDefinite&) {
    throw SolveFailure(
        "weight_space_update: Φ Φᵀ is singular; use a positive regularizer (noise variance)");
  }
  return out;
}

void check_weight_space(const PriorPath& path, const Dataset& data, double regularizer) {
  if (!path.is_weight_space()) throw InvalidArgument("weight_space_update: needs a weight-space path");
  if (path.has_mean()) throw InvalidArgument("weight_space_update: mean functions are not supported");
  data.validate(path.dim());
  if (!(regularizer >= 0.0)) throw InvalidArgument("weight_space_update: negative regularizer");
}

}  // namespace

PriorPath weight_space_update(const PriorPath& path, const Dataset& data, double regularizer,
                              Rng* noise_rng) {
  return weight_space_update(std::vector<PriorPath>{path}, data, regularizer, noise_rng).front();
}

std::vector<PriorPath> weight_space_update(const std::vector<PriorPath>& paths,
                                           const Dataset& data, double regularizer,
                                           Rng* noise_rng) {
  for (const auto& p : paths) check_weight_space(p, data, regularizer);
  if (data.size() == 0) return paths;
  std::vector<PriorPath> out;
  out.reserve(paths.size());
  std::size_t begin = 0;
  while (begin < paths.size()) {
    const auto& basis = paths[begin].basis();
    std::size_t end = begin;
    while (end < paths.size() && paths[end].basis() == basis) ++end;
    const Index count = static_cast<Index>(end - begin);
    const WeightSpaceSystem sys = weight_space_system(*basis, data, regularizer);
    Matrix W(basis->size(), count);
    for (Index s = 0; s < count; ++s) W.col(s) = paths[begin + static_cast<std::size_t>(s)].weights();
    Matrix residual = data.y.replicate(1, count) - basis->features(data.X) * W;
    if (noise_rng && regularizer > 0.0)
      residual -= std::sqrt(regularizer) * standard_normal(data.size(), count, *noise_rng);
    W.noalias() += sys.PhiS.transpose() * linalg::solve_psd(sys.factor, residual);
    for (Index s = 0; s < count; ++s) out.push_back(PriorPath::weight_space(basis, W.col(s)));
    begin = end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracles

GaussianMoments posterior_moments(const CovarianceFunction& prior, const Dataset& data,
                                  const Locations& X_star) {
  if (data.y.size() != data.X.rows())
    throw InvalidArgument("posterior_moments: observation count does not match locations");
  GaussianMoments out;
  const Matrix C_ss = prior(X_star, X_star);
  if (data.size() == 0) {
    out.mean = Vector::Zero(X_star.rows());
    out.covariance = C_ss;
    return out;
  }
  Matrix A = prior(data.X, data.X);
  A.diagonal().array() += data.noise_variance;
  linalg::CholeskyFactor factor;
  try {
    factor = linalg::cholesky(A);
  } catch (const NotPositiveDefinite& e) {
    throw SolveFailure(std::string("posterior_moments: ") + e.what());
  }
  const auto L = factor.L.triangularView<Eigen::Lower>();
  const Matrix V = L.solve(prior(data.X, X_star));
  const Vector a = L.solve(data.y);
  out.mean = V.transpose() * a;
  out.covariance = C_ss;
  out.covariance.noalias() -= V.transpose() * V;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

GaussianMoments posterior_moments(const Kernel& kernel, const Dataset& data,
                                  const Locations& X_star) {
  data.validate(kernel.dim());
  return posterior_moments(as_covariance(kernel), data, X_star);
}

namespace {

// ξ = (Kₙₙ + σ² I)⁻¹ Kₙ*, n x m*.
Matrix weight_function(const Kernel& update_kernel, const Dataset& data, const Locations& X_star) {
  Matrix A = update_kernel.eval(data.X);
  A.diagonal().array() += data.noise_variance;
  linalg::CholeskyFactor factor;
  try {
    factor = linalg::cholesky(A);
  } catch (const NotPositiveDefinite& e) {
    throw SolveFailure(std::string("decoupled_posterior_covariance: ") + e.what());
  }
  return linalg::solve_psd(factor, update_kernel.eval(data.X, X_star));
}

}  // namespace

GaussianMoments decoupled_posterior_covariance(const CovarianceFunction& prior,
                                               const Kernel& update_kernel, const Dataset& data,
                                               const Locations& X_star) {
  data.validate(update_kernel.dim());
  GaussianMoments out;
  if (data.size() == 0) {
    out.mean = Vector::Zero(X_star.rows());
    out.covariance = prior(X_star, X_star);
    return out;
  }
  const Matrix xi = weight_function(update_kernel, data, X_star);
  const Matrix C_sn = prior(X_star, data.X);
  Matrix C_nn = prior(data.X, data.X);
  C_nn.diagonal().array() += data.noise_variance;
  out.mean = xi.transpose() * data.y;
  out.covariance = prior(X_star, X_star) - C_sn * xi - xi.transpose() * C_sn.transpose() +
                   xi.transpose() * C_nn * xi;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

GaussianMoments decoupled_posterior_covariance(const FeatureBasis& basis,
                                               const Kernel& update_kernel, const Dataset& data,
                                               const Locations& X_star) {
  data.validate(update_kernel.dim());
  if (basis.dim() != update_kernel.dim())
    throw InvalidArgument("decoupled_posterior_covariance: basis and kernel dimensions differ");
  const Vector sd = basis.weight_variances().cwiseSqrt();
  GaussianMoments out;
  Matrix B = basis.features(X_star);
  if (data.size() == 0) {
    out.mean = Vector::Zero(X_star.rows());
    B = B * sd.asDiagonal();
    out.covariance = B * B.transpose();
    return out;
  }
  const Matrix xi = weight_function(update_kernel, data, X_star);
  out.mean = xi.transpose() * data.y;
  B.noalias() -= xi.transpose() * basis.features(data.X);
  B = B * sd.asDiagonal();
  out.covariance = B * B.transpose();
  if (data.noise_variance > 0.0) out.covariance.noalias() += data.noise_variance * xi.transpose() * xi;
  return out;
}

InducingMoments pseudo_data_moments(const Kernel& kernel, const Locations& Z,
                                    const PseudoData& pseudo) {
  const InducingModel check{Z, pseudo};
  check.validate(kernel.dim());
  const Matrix K = kernel.eval(Z);
  Matrix M = K;
  M.diagonal() += pseudo.noise_variances;
  const auto factor = linalg::cholesky(M);
  InducingMoments out;
  out.mean = K * linalg::solve_psd(factor, pseudo.targets);
  out.covariance = K - K * linalg::solve_psd(factor, K);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

GaussianMoments inducing_posterior_moments(const Kernel& kernel, const InducingModel& inducing,
                                           const Locations& X_star) {
  inducing.validate(kernel.dim());
  const InducingMoments q = std::holds_alternative<InducingMoments>(inducing.parameters)
                                ? std::get<InducingMoments>(inducing.parameters)
                                : pseudo_data_moments(kernel, inducing.Z,
                                                      std::get<PseudoData>(inducing.parameters));
  const Matrix K = kernel.eval(inducing.Z);
  const auto factor = linalg::cholesky(K);
  const Matrix A = linalg::solve_psd(factor, kernel.eval(inducing.Z, X_star));  // K⁻¹ K_m*
  GaussianMoments out;
  out.mean = A.transpose() * q.mean;
  out.covariance = kernel.eval(X_star) - A.transpose() * (K - q.covariance) * A;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

}  // namespace pathwise
