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

#include "pathwise/bench/sde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "pathwise/bench/csv.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/prior.hpp"
#include "../vmath.hpp"

namespace pathwise::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kOverflow = 1e3;

}  // namespace

State fitzhugh_nagumo_drift(const State& x, double a, const FitzHughNagumo& p) {
  const double v = x(0), w = x(1);
  return {v - v * v * v / 3.0 - w + a, (v - p.beta * w + p.alpha) / p.gamma};
}

State fitzhugh_nagumo_equilibrium(double a, const FitzHughNagumo& p) {
  // On the recovery nullcline w = (v + α)/β the v-drift is a cubic that
  // tends to +inf as v -> -inf; bisect for its sign change.
  const auto g = [&](double v) { return v - v * v * v / 3.0 - (v + p.alpha) / p.beta + a; };
  double lo = -10.0 - std::abs(a), hi = 10.0 + std::abs(a);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double v = 0.5 * (lo + hi);
  return {v, (v + p.alpha) / p.beta};
}

void SdeConfig::validate() const {
  if (!(tau > 0.0)) throw InvalidArgument("sde: tau must be positive");
  if (horizon < 1) throw InvalidArgument("sde: horizon must be at least 1");
  if (trajectories < 1) throw InvalidArgument("sde: need at least one trajectory");
  if (diffusion.rows() != 2 || diffusion.cols() != 2 || initial_covariance.rows() != 2 ||
      initial_covariance.cols() != 2)
    throw InvalidArgument("sde: states are two-dimensional");
  if (!control) throw InvalidArgument("sde: missing control signal");
  for (const Matrix* m : {&diffusion, &initial_covariance}) {
    if (!m->allFinite() || !m->isApprox(m->transpose(), 0.0) ||
        Eigen::SelfAdjointEigenSolver<Matrix>(*m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() <
            -1e-12 * std::max(1.0, m->norm()))
      throw InvalidArgument("sde: diffusion and initial covariance must be symmetric PSD");
  }
}

Matrix TrajectorySet::states_at(Index t) const {
  Matrix out(size(), 2);
  Index rows = 0;
  for (const auto& p : paths) {
    if (t < 0 || t >= p.rows()) throw InvalidArgument("states_at: step out of range");
    if (p.row(t).allFinite()) out.row(rows++) = p.row(t);
  }
  out.conservativeResize(rows, 2);
  return out;
}

Index TrajectorySet::truncated_count() const {
  return static_cast<Index>(std::count(truncated.begin(), truncated.end(), true));
}

TrajectorySet simulate_sde(const DriftFactory& factory, const SdeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Eigen::Matrix2d noise_root = std::sqrt(cfg.tau) * linalg::psd_sqrt(cfg.diffusion);
  const Eigen::Matrix2d init_root = linalg::psd_sqrt(cfg.initial_covariance);
  std::normal_distribution<double> normal;
  const auto draw = [&normal](Rng& rng) {
    State z;
    z(0) = normal(rng);
    z(1) = normal(rng);
    return z;
  };
  TrajectorySet out;
  out.paths.reserve(static_cast<std::size_t>(cfg.trajectories));
  for (Index i = 0; i < cfg.trajectories; ++i) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    Rng drift_rng = split_stream(s, 0);
    Rng noise_rng = split_stream(s, 1);
    const DriftFunction f = factory(i, drift_rng);
    Matrix path = Matrix::Constant(cfg.horizon + 1, 2, kNaN);
    State x = cfg.initial_mean + init_root * draw(noise_rng);
    path.row(0) = x.transpose();
    bool truncated = false;
    for (Index t = 0; t < cfg.horizon; ++t) {
      const double a = cfg.control(static_cast<double>(t) * cfg.tau);
      x += cfg.tau * f(x, a) + noise_root * draw(noise_rng);
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kOverflow) {
        truncated = true;
        break;
      }
      path.row(t + 1) = x.transpose();
    }
    out.paths.push_back(std::move(path));
    out.truncated.push_back(truncated);
  }
  return out;
}

TrajectorySet simulate_sde(const DriftFunction& drift, const SdeConfig& cfg, std::uint64_t seed) {
  return simulate_sde([&drift](Index, Rng&) { return drift; }, cfg, seed);
}

SdeModel fit_sde_model(const SdeModelConfig& cfg, Rng& rng) {
  if (cfg.n_train < 1 || cfg.inducing < 1 || cfg.inducing > cfg.n_train || cfg.features < 1)
    throw InvalidArgument("sde model: need 1 <= inducing <= n_train and features >= 1");
  if (cfg.output_scale.size() != 2 || !(cfg.output_scale.array() > 0.0).all())
    throw InvalidArgument("sde model: two positive output scales required");
  if (!(cfg.relative_noise > 0.0) || !(cfg.train_noise >= 0.0))
    throw InvalidArgument("sde model: noise levels must be positive");
  KernelConfig kc = cfg.kernel;
  kc.variance = 1.0;
  SdeModel model{Kernel(kc), Locations(), Matrix(), cfg.output_scale, {}, nullptr, cfg.features};
  if (model.kernel.dim() != 3) throw InvalidArgument("sde model: kernel acts on (v, w, a)");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Locations X(cfg.n_train, 3);
  for (Index i = 0; i < cfg.n_train; ++i)
    for (Index j = 0; j < 3; ++j)
      X(i, j) = cfg.box_low(j) + (cfg.box_high(j) - cfg.box_low(j)) * unit(rng);
  Matrix Y(cfg.n_train, 2);
  for (Index i = 0; i < cfg.n_train; ++i)
    Y.row(i) = fitzhugh_nagumo_drift(X.row(i).head(2).transpose(), X(i, 2)).transpose() +
               std::sqrt(cfg.train_noise) * standard_normal(2, rng).transpose();

  // Points are i.i.d., so the first m form a uniform subsample.
  model.Z = X.topRows(cfg.inducing);
  model.targets = Y.topRows(cfg.inducing) * cfg.output_scale.cwiseInverse().asDiagonal();
  const Vector noise = Vector::Constant(cfg.inducing, cfg.relative_noise);
  for (int o = 0; o < 2; ++o) model.pseudo[o] = PseudoData{model.targets.col(o), noise};
  model.system = std::make_shared<const ConditioningSystem>(model.kernel, model.Z, noise);
  model.system->factor();
  return model;
}

namespace {

// Both outputs of one trajectory share the Fourier basis and the inducing
// system, so one pass over the features serves both.
struct PathPair {
  Matrix freq;      // 2π Ω, ℓ x 3
  Vector phase;     // ℓ
  Matrix weights;   // amplitude * W, ℓ x 2, scaled per output
  Matrix coeffs;    // m x 2, scaled per output
  Kernel kernel;
  Matrix Zs;        // m x 3, centers divided by the lengthscales
  Vector inv_ls;    // 3
  Vector work;      // ℓ
  Eigen::ArrayXd r2;  // m

  State operator()(const State& x, double a) {
    const Eigen::Vector3d p(x(0), x(1), a);
    State out;
    detail::cosine_expansion(freq.data(), phase.data(), weights.data(),
                             static_cast<std::size_t>(freq.rows()), 3, 2, p.data(), work.data(),
                             out.data());
    const Eigen::Vector3d ps = p.cwiseProduct(inv_ls);
    r2 = (Zs.col(0).array() - ps(0)).square() + (Zs.col(1).array() - ps(1)).square() +
         (Zs.col(2).array() - ps(2)).square();
    out.noalias() += coeffs.transpose() * kernel.profile_squared(r2).matrix();
    return out;
  }
};

}  // namespace

DriftFactory pathwise_drift(const SdeModel& model) {
  return [model](Index, Rng& rng) -> DriftFunction {
    const auto basis = build_rff_basis(model.kernel, model.features, rng);
    const auto priors = sample_prior_path(basis, 2, rng);
    const Index m = model.Z.rows();
    const Matrix eps = model.pseudo[0].noise_variances.cwiseSqrt().asDiagonal() *
                       standard_normal(m, 2, rng);
    const auto posts = pathwise_update(priors, model.system, model.targets, eps);
    auto pair = std::make_shared<PathPair>(PathPair{2.0 * M_PI * basis->frequencies(),
                                                    basis->phases(),
                                                    Matrix(basis->size(), 2),
                                                    Matrix(m, 2),
                                                    model.kernel,
                                                    Matrix(),
                                                    model.kernel.lengthscales().cwiseInverse(),
                                                    Vector(basis->size()),
                                                    Eigen::ArrayXd(m)});
    pair->Zs = model.Z * pair->inv_ls.asDiagonal();
    for (int o = 0; o < 2; ++o) {
      pair->weights.col(o) = model.output_scale(o) * basis->amplitude() * posts[o].prior().weights();
      pair->coeffs.col(o) = model.output_scale(o) * posts[o].coefficients();
    }
    return [pair](const State& x, double a) -> State { return (*pair)(x, a); };
  };
}

DriftFactory exact_drift(const SdeModel& model, Index horizon) {
  // q(u) is shared by both outputs up to the mean.
  InducingMoments q[2] = {pseudo_data_moments(model.kernel, model.Z, model.pseudo[0]),
                          pseudo_data_moments(model.kernel, model.Z, model.pseudo[1])};
  Matrix root;
  try {
    root = linalg::cholesky(q[0].covariance).L;
  } catch (const NotPositiveDefinite&) {
    root = linalg::psd_sqrt(q[0].covariance);
  }
  Matrix mean(model.Z.rows(), 2);
  mean << q[0].mean, q[1].mean;
  return [model, root, mean, horizon](Index, Rng& rng) -> DriftFunction {
    const Matrix U = (root * standard_normal(root.rows(), 2, rng)) + mean;
    auto sampler = std::make_shared<SequentialSampler>(model.kernel, 2);
    sampler->reserve(model.Z.rows() + horizon + 1);
    sampler->condition(model.Z, U);
    auto local = std::make_shared<Rng>(rng());
    const Vector scale = model.output_scale;
    return [sampler, local, scale](const State& x, double a) -> State {
      Vector p(3);
      p << x(0), x(1), a;
      return sampler->sample_point(p, *local).cwiseProduct(scale);
    };
  };
}

std::string to_string(SdeMode m) {
  switch (m) {
    case SdeMode::GroundTruth: return "ground_truth";
    case SdeMode::Pathwise: return "pathwise";
    case SdeMode::Exact: return "exact";
    case SdeMode::ExactReference: return "exact_reference";
  }
  return "?";
}

SdeMode parse_sde_mode(const std::string& name) {
  for (auto m : {SdeMode::GroundTruth, SdeMode::Pathwise, SdeMode::Exact, SdeMode::ExactReference})
    if (name == to_string(m)) return m;
  throw InvalidArgument("sde: unknown mode '" + name + "'");
}

SdeExperimentConfig SdeExperimentConfig::from(const KeyValueConfig& kv) {
  SdeExperimentConfig c;
  c.sde.tau = kv.get_double("tau", c.sde.tau);
  c.sde.horizon = kv.get_int("horizon", c.sde.horizon);
  c.sde.trajectories = kv.get_int("trajectories", c.sde.trajectories);
  const auto diff = kv.get_doubles("diffusion", {1e-4});
  if (diff.size() == 1)
    c.sde.diffusion = diff[0] * Matrix::Identity(2, 2);
  else if (diff.size() == 4)
    c.sde.diffusion = Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>>(diff.data());
  else
    throw InvalidArgument("sde: diffusion takes 1 or 4 values");
  c.control = kv.get_double("control", c.control);
  const double ctl = c.control;
  c.sde.control = [ctl](double) { return ctl; };
  const double a0 = kv.get_double("initial_control", 0.0);
  c.sde.initial_mean = fitzhugh_nagumo_equilibrium(a0);
  const double spread = kv.get_double("initial_variance", 0.0);
  c.sde.initial_covariance = spread * Matrix::Identity(2, 2);

  c.model.n_train = kv.get_int("n_train", c.model.n_train);
  c.model.inducing = kv.get_int("inducing", c.model.inducing);
  c.model.kernel = read_kernel(kv, 3, c.model.kernel);
  const auto scales = kv.get_doubles("output_scale", {2.0, 0.1});
  if (scales.size() != 2) throw InvalidArgument("sde: output_scale takes 2 values");
  c.model.output_scale = Eigen::Map<const Vector>(scales.data(), 2);
  c.model.train_noise = kv.get_double("train_noise", c.model.train_noise);
  c.model.relative_noise = kv.get_double("relative_noise", c.model.relative_noise);
  c.model.features = kv.get_int("features", c.model.features);

  const auto modes = kv.get_strings("modes", {});
  if (!modes.empty()) {
    c.modes.clear();
    for (const auto& m : modes) c.modes.push_back(parse_sde_mode(m));
  }
  const auto steps = kv.get_ints("record_steps", {250, 500, 1000});
  c.record_steps.assign(steps.begin(), steps.end());
  c.sinkhorn_reg = kv.get_double("sinkhorn_reg", c.sinkhorn_reg);
  c.sinkhorn_max_iter = kv.get_int("sinkhorn_max_iter", c.sinkhorn_max_iter);
  c.sinkhorn_tol = kv.get_double("sinkhorn_tol", c.sinkhorn_tol);
  c.record_wall_time = kv.get_bool("record_wall_time", c.record_wall_time);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  return c;
}

void SdeExperimentConfig::validate() const {
  sde.validate();
  if (modes.empty()) throw InvalidArgument("sde: no modes");
  for (auto t : record_steps)
    if (t < 0 || t > sde.horizon) throw InvalidArgument("sde: record step outside [0, horizon]");
  if (!(sinkhorn_reg > 0.0)) throw InvalidArgument("sde: sinkhorn_reg must be positive");
  if (sinkhorn_max_iter < 1) throw InvalidArgument("sde: sinkhorn_max_iter must be positive");
  if (!(sinkhorn_tol > 0.0)) throw InvalidArgument("sde: sinkhorn_tol must be positive");
  if (model.kernel.lengthscales.size() != 3) throw InvalidArgument("sde: kernel acts on (v, w, a)");
  Kernel{model.kernel};
  for (auto m : modes)
    if (m == SdeMode::Pathwise && !has_spectral_density(model.kernel.family))
      throw UnsupportedFamily("sde: pathwise mode needs a spectral density");
}

ConfigDigest SdeExperimentConfig::digest() const {
  std::vector<std::string> names;
  for (auto m : modes) names.push_back(to_string(m));
  ConfigDigest d;
  d.add("tau", sde.tau)
      .add("horizon", std::int64_t{sde.horizon})
      .add("trajectories", std::int64_t{sde.trajectories})
      .add("diffusion", std::vector<double>(sde.diffusion.data(), sde.diffusion.data() + 4))
      .add("control", control)
      .add("initial_mean", std::vector<double>{sde.initial_mean(0), sde.initial_mean(1)})
      .add("initial_variance", sde.initial_covariance(0, 0))
      .add("n_train", std::int64_t{model.n_train})
      .add("inducing", std::int64_t{model.inducing})
      .add("kernel", model.kernel)
      .add("output_scale", std::vector<double>{model.output_scale(0), model.output_scale(1)})
      .add("train_noise", model.train_noise)
      .add("relative_noise", model.relative_noise)
      .add("features", std::int64_t{model.features})
      .add("modes", names)
      .add("record_steps", std::vector<std::int64_t>(record_steps.begin(), record_steps.end()))
      .add("sinkhorn_reg", sinkhorn_reg)
      .add("sinkhorn_max_iter", std::int64_t{sinkhorn_max_iter})
      .add("sinkhorn_tol", sinkhorn_tol)
      .add("record_wall_time", std::int64_t{record_wall_time})
      .add("seed", std::to_string(seed));
  return d;
}

const SdeModeResult& SdeResult::mode(SdeMode m) const {
  for (const auto& r : modes)
    if (r.mode == m) return r;
  throw InvalidArgument("sde: mode " + to_string(m) + " was not run");
}

double SdeResult::distance(SdeMode a, SdeMode b, Index step) const {
  for (const auto& d : distances)
    if (d.step == step && ((d.a == a && d.b == b) || (d.a == b && d.b == a))) return d.distance;
  throw InvalidArgument("sde: distance not computed");
}

SdeResult run_sde(const SdeExperimentConfig& cfg) {
  cfg.validate();
  SdeResult result;
  Rng model_rng = split_stream(cfg.seed, 0);
  const SdeModel model = fit_sde_model(cfg.model, model_rng);

  for (auto m : cfg.modes) {
    const std::uint64_t seed = derive_seed(cfg.seed, 1 + static_cast<std::uint64_t>(m));
    const auto start = std::chrono::steady_clock::now();
    TrajectorySet set;
    switch (m) {
      case SdeMode::GroundTruth:
        set = simulate_sde(DriftFunction([](const State& x, double a) {
                             return fitzhugh_nagumo_drift(x, a);
                           }),
                           cfg.sde, seed);
        break;
      case SdeMode::Pathwise:
        set = simulate_sde(pathwise_drift(model), cfg.sde, seed);
        break;
      case SdeMode::Exact:
      case SdeMode::ExactReference:
        set = simulate_sde(exact_drift(model, cfg.sde.horizon), cfg.sde, seed);
        break;
    }
    const double elapsed =
        cfg.record_wall_time
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            : 0.0;
    result.modes.push_back({m, std::move(set), elapsed});
  }

  const auto has = [&](SdeMode m) {
    return std::find(cfg.modes.begin(), cfg.modes.end(), m) != cfg.modes.end();
  };
  const std::pair<SdeMode, SdeMode> pairs[] = {{SdeMode::Pathwise, SdeMode::Exact},
                                               {SdeMode::Exact, SdeMode::ExactReference},
                                               {SdeMode::GroundTruth, SdeMode::Pathwise},
                                               {SdeMode::GroundTruth, SdeMode::Exact}};
  for (const auto& [a, b] : pairs) {
    if (!has(a) || !has(b)) continue;
    for (auto t : cfg.record_steps) {
      const Matrix A = result.mode(a).trajectories.states_at(t);
      const Matrix B = result.mode(b).trajectories.states_at(t);
      SdeDistance d{a, b, t, kNaN, false};
      if (A.rows() > 0 && B.rows() > 0) {
        const SinkhornResult s = sinkhorn_distance(A, B, cfg.sinkhorn_reg, SinkhornOptions{.max_iter = cfg.sinkhorn_max_iter, .tol = cfg.sinkhorn_tol});
        d.distance = s.distance;
        d.converged = s.converged;
      }
      result.distances.push_back(d);
    }
  }
  return result;
}

void write_sde_csv(std::ostream& out, const SdeExperimentConfig& cfg, const SdeResult& result) {
  CsvWriter csv(out, "pathwise.sde", 1, cfg.digest().hash(),
                {"record", "label", "step", "count", "mean_v", "mean_w", "sd_v", "sd_w",
                 "distance", "wall_time_s", "truncated"});
  for (const auto& r : result.modes) {
    for (auto t : cfg.record_steps) {
      const Matrix S = r.trajectories.states_at(t);
      const Index c = S.rows();
      double mv = kNaN, mw = kNaN, sv = kNaN, sw = kNaN;
      if (c > 0) {
        const Vector mean = S.colwise().mean().transpose();
        mv = mean(0);
        mw = mean(1);
        if (c > 1) {
          const Matrix centered = S.rowwise() - mean.transpose();
          const Vector var = centered.colwise().squaredNorm().transpose() / static_cast<double>(c - 1);
          sv = std::sqrt(var(0));
          sw = std::sqrt(var(1));
        }
      }
      csv.row({std::string("state"), to_string(r.mode), std::int64_t{t}, std::int64_t{c}, mv, mw,
               sv, sw, kNaN, r.wall_time, std::int64_t{r.trajectories.truncated_count()}});
    }
  }
  for (const auto& d : result.distances)
    csv.row({std::string(d.converged ? "distance" : "distance_unconverged"),
             to_string(d.a) + "|" + to_string(d.b), std::int64_t{d.step}, std::int64_t{0}, kNaN,
             kNaN, kNaN, kNaN, d.distance, 0.0, std::int64_t{0}});
}

}  // namespace pathwise::bench
