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

#include "pathwise/bench/thompson.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pathwise/bench/csv.hpp"
#include "pathwise/prior.hpp"

namespace pathwise::bench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix uniform_points(Index n, Index d, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix X(n, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) X(i, j) = unit(rng);
  return X;
}

double evaluate_at(const PosteriorPath& path, const Vector& x) {
  return path.evaluate(x.transpose())(0);
}

// Rows of `pool` with the smallest independent marginal posterior draws.
Locations screen(const Kernel& kernel, const Dataset& data,
                 const std::shared_ptr<const ConditioningSystem>& system, const Locations& pool,
                 Index keep, Rng& rng) {
  Vector mean = Vector::Zero(pool.rows());
  Vector var = Vector::Constant(pool.rows(), kernel.variance());
  if (data.size() > 0) {
    const Matrix Kxn = kernel.eval(data.X, pool);
    const auto& L = system->factor().L;
    const Matrix V = L.triangularView<Eigen::Lower>().solve(Kxn);
    const Vector a = L.triangularView<Eigen::Lower>().solve(data.y);
    mean = V.transpose() * a;
    var -= V.colwise().squaredNorm().transpose();
  }
  const Vector draws =
      mean + var.cwiseMax(0.0).cwiseSqrt().cwiseProduct(standard_normal(pool.rows(), rng));
  std::vector<Index> order(static_cast<std::size_t>(pool.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index k = std::min(keep, pool.rows());
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Index i, Index j) { return draws(i) < draws(j) || (draws(i) == draws(j) && i < j); });
  Locations out(k, pool.cols());
  for (Index i = 0; i < k; ++i) out.row(i) = pool.row(order[static_cast<std::size_t>(i)]);
  return out;
}

struct Choice {
  Vector x;
  bool fallback = false;
};

Choice optimize_path(const PosteriorPath& path, const Locations& starts, const ThompsonConfig& cfg,
                     double step) {
  const Vector start_values = path.evaluate(starts);
  Index best_start = 0;
  for (Index i = 1; i < starts.rows(); ++i)
    if (start_values(i) < start_values(best_start)) best_start = i;
  Choice choice{starts.row(best_start).transpose(), false};
  double best = start_values(best_start);
  if (!std::isfinite(best)) return {choice.x, true};
  for (Index i = 0; i < starts.rows(); ++i) {
    const DescentResult r = minimize_path(path, starts.row(i).transpose(), cfg.ms_steps, step);
    if (!r.finite) {
      choice.fallback = true;
      continue;
    }
    if (r.value < best) {
      best = r.value;
      choice.x = r.x;
    }
  }
  return choice;
}

}  // namespace

DescentResult minimize_path(const PosteriorPath& path, const Vector& x0, Index steps, double step) {
  DescentResult out{x0, evaluate_at(path, x0), true};
  if (!std::isfinite(out.value)) {
    out.finite = false;
    return out;
  }
  for (Index it = 0; it < steps; ++it) {
    const Vector g = path.gradient(out.x);
    if (!g.allFinite()) {
      out.finite = false;
      return out;
    }
    const double norm = g.norm();
    if (norm == 0.0) break;
    bool moved = false;
    for (double eta = step; eta > step * 1e-6; eta *= 0.5) {
      const Vector trial = (out.x - (eta / norm) * g).cwiseMax(0.0).cwiseMin(1.0);
      const double value = evaluate_at(path, trial);
      if (!std::isfinite(value)) {
        out.finite = false;
        return out;
      }
      if (value < out.value) {
        out.x = trial;
        out.value = value;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return out;
}

std::string to_string(ThompsonStrategy s) {
  switch (s) {
    case ThompsonStrategy::Decoupled: return "decoupled";
    case ThompsonStrategy::WeightSpace: return "weight-space";
    case ThompsonStrategy::LocationScale: return "location-scale";
    case ThompsonStrategy::Random: return "random";
  }
  return "?";
}

ThompsonStrategy parse_thompson_strategy(const std::string& name) {
  for (auto s : {ThompsonStrategy::Decoupled, ThompsonStrategy::WeightSpace,
                 ThompsonStrategy::LocationScale, ThompsonStrategy::Random})
    if (name == to_string(s)) return s;
  throw InvalidArgument("thompson: unknown strategy '" + name + "'");
}

ThompsonConfig::ThompsonConfig()
    : kernel{KernelFamily::Matern52, std::vector<double>(2, std::sqrt(2.0 / 100.0)), 1.0} {}

ThompsonConfig ThompsonConfig::from(const KeyValueConfig& kv) {
  ThompsonConfig c;
  c.dim = kv.get_int("dim", c.dim);
  if (c.dim < 1) throw InvalidArgument("thompson: dim must be positive");
  c.kernel = read_kernel(
      kv, c.dim,
      KernelConfig{KernelFamily::Matern52, {std::sqrt(static_cast<double>(c.dim) / 100.0)}, 1.0});
  c.noise_variance = kv.get_double("noise_variance", c.noise_variance);
  c.batch = kv.get_int("batch", c.batch);
  c.rounds = kv.get_int("rounds", c.rounds);
  c.replicates = kv.get_int("replicates", c.replicates);
  c.features = kv.get_int("features", c.features);
  c.pool = kv.get_int("pool", c.pool);
  c.ls_candidates = kv.get_int("ls_candidates", c.ls_candidates);
  c.ms_starts = kv.get_int("ms_starts", c.ms_starts);
  c.ms_steps = kv.get_int("ms_steps", c.ms_steps);
  c.ms_step = kv.get_double("ms_step", c.ms_step);
  const auto names = kv.get_strings("strategies", {});
  if (!names.empty()) {
    c.strategies.clear();
    for (const auto& n : names) c.strategies.push_back(parse_thompson_strategy(n));
  }
  c.record_wall_time = kv.get_bool("record_wall_time", c.record_wall_time);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  return c;
}

void ThompsonConfig::validate() const {
  if (dim < 1) throw InvalidArgument("thompson: dim must be positive");
  if (static_cast<Index>(kernel.lengthscales.size()) != dim)
    throw InvalidArgument("thompson: kernel dimension does not match dim");
  Kernel{kernel};
  if (!(noise_variance > 0.0)) throw InvalidArgument("thompson: noise_variance must be positive");
  if (batch < 1 || rounds < 1 || replicates < 1 || features < 1 || pool < 1 ||
      ls_candidates < 1 || ms_starts < 1 || ms_steps < 0)
    throw InvalidArgument("thompson: counts must be positive");
  if (!(ms_step > 0.0)) throw InvalidArgument("thompson: ms_step must be positive");
  if (strategies.empty()) throw InvalidArgument("thompson: no strategies");
  for (auto s : strategies)
    if ((s == ThompsonStrategy::Decoupled || s == ThompsonStrategy::WeightSpace) &&
        !has_spectral_density(kernel.family))
      throw UnsupportedFamily("thompson: pathwise strategies need a spectral density");
}

ConfigDigest ThompsonConfig::digest() const {
  std::vector<std::string> names;
  for (auto s : strategies) names.push_back(to_string(s));
  ConfigDigest d;
  d.add("dim", std::int64_t{dim})
      .add("kernel", kernel)
      .add("noise_variance", noise_variance)
      .add("batch", std::int64_t{batch})
      .add("rounds", std::int64_t{rounds})
      .add("replicates", std::int64_t{replicates})
      .add("features", std::int64_t{features})
      .add("pool", std::int64_t{pool})
      .add("ls_candidates", std::int64_t{ls_candidates})
      .add("ms_starts", std::int64_t{ms_starts})
      .add("ms_steps", std::int64_t{ms_steps})
      .add("ms_step", ms_step)
      .add("strategies", names)
      .add("record_wall_time", std::int64_t{record_wall_time})
      .add("seed", std::to_string(seed));
  return d;
}

std::vector<ThompsonRow> run_thompson(const ThompsonConfig& cfg) {
  cfg.validate();
  const Kernel kernel(cfg.kernel);
  const double step = cfg.ms_step * kernel.lengthscales().mean();
  const double noise_sd = std::sqrt(cfg.noise_variance);
  std::vector<ThompsonRow> rows;

  for (Index rep = 0; rep < cfg.replicates; ++rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    // One black-box draw per replicate, shared by every strategy.
    SequentialSampler black_box(kernel);
    black_box.reserve(static_cast<Index>(cfg.strategies.size()) * cfg.rounds * cfg.batch);
    Rng box_rng = split_stream(rep_seed, 0);

    for (std::size_t k = 0; k < cfg.strategies.size(); ++k) {
      const ThompsonStrategy strategy = cfg.strategies[k];
      Rng rng = split_stream(rep_seed, k + 1);
      Dataset data{Locations(0, cfg.dim), Vector(0), cfg.noise_variance};
      double best = kInf;

      for (Index round = 0; round < cfg.rounds; ++round) {
        const auto start = std::chrono::steady_clock::now();
        Index fallbacks = 0;
        Locations queries(cfg.batch, cfg.dim);
        if (strategy == ThompsonStrategy::Random) {
          queries = uniform_points(cfg.batch, cfg.dim, rng);
        } else {
          const auto system = std::make_shared<const ConditioningSystem>(
              kernel, data.X, Vector::Constant(data.size(), cfg.noise_variance));
          for (Index q = 0; q < cfg.batch; ++q) {
            const Locations pool = uniform_points(cfg.pool, cfg.dim, rng);
            if (strategy == ThompsonStrategy::LocationScale) {
              const Locations cand = screen(kernel, data, system, pool, cfg.ls_candidates, rng);
              const GaussianMoments post = posterior_moments(kernel, data, cand);
              Matrix root;
              try {
                root = linalg::cholesky(post.covariance).L;
              } catch (const NotPositiveDefinite&) {
                root = linalg::psd_sqrt(post.covariance);
              }
              const Vector f = post.mean + root * standard_normal(cand.rows(), rng);
              Index arg = 0;
              f.minCoeff(&arg);
              queries.row(q) = cand.row(arg);
              continue;
            }
            const Locations starts = screen(kernel, data, system, pool, cfg.ms_starts, rng);
            std::optional<PosteriorPath> path;
            if (strategy == ThompsonStrategy::Decoupled) {
              const auto basis = build_rff_basis(kernel, cfg.features, rng);
              const PriorPath prior = sample_prior_path(basis, 1, rng).front();
              if (data.size() == 0)
                path = PosteriorPath::from_prior(prior, kernel);
              else
                path = gaussian_update(prior, data, system, rng);
            } else {
              const auto basis = build_rff_basis(kernel, cfg.features + data.size(), rng);
              const PriorPath prior = sample_prior_path(basis, 1, rng).front();
              path = PosteriorPath::from_prior(
                  weight_space_update(prior, data, cfg.noise_variance, &rng), kernel);
            }
            const Choice c = optimize_path(*path, starts, cfg, step);
            fallbacks += c.fallback ? 1 : 0;
            queries.row(q) = c.x.transpose();
          }
        }
        const double elapsed =
            cfg.record_wall_time
                ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                : 0.0;

        const Matrix f = black_box.sample(queries, box_rng);
        const Index n = data.size();
        data.X.conservativeResize(n + cfg.batch, Eigen::NoChange);
        data.y.conservativeResize(n + cfg.batch);
        for (Index q = 0; q < cfg.batch; ++q) {
          data.X.row(n + q) = queries.row(q);
          data.y(n + q) = f(q, 0) + noise_sd * standard_normal(1, rng)(0);
          best = std::min(best, f(q, 0));
        }
        rows.push_back({strategy, rep, round, best, elapsed, fallbacks});
      }
    }
  }
  return rows;
}

double median_best_value(const std::vector<ThompsonRow>& rows, ThompsonStrategy strategy,
                         Index round) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.strategy == strategy && r.round == round) v.push_back(r.best_value);
  if (v.empty()) throw InvalidArgument("median_best_value: no rows for that strategy and round");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void write_thompson_csv(std::ostream& out, const ThompsonConfig& cfg,
                        const std::vector<ThompsonRow>& rows) {
  CsvWriter csv(out, "pathwise.thompson", 1, cfg.digest().hash(),
                {"strategy", "replicate", "round", "best_value", "wall_time_s", "fallbacks"});
  for (const auto& r : rows)
    csv.row({to_string(r.strategy), std::int64_t{r.replicate}, std::int64_t{r.round},
             r.best_value, r.wall_time, std::int64_t{r.fallbacks}});
}

}  // namespace pathwise::bench
