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

#include "pathwise/bench/accuracy_cost.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "pathwise/bench/csv.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/prior.hpp"

namespace pathwise::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* update_name(UpdateKind u) {
  switch (u) {
    case UpdateKind::Canonical: return "canonical";
    case UpdateKind::Gaussian: return "gaussian";
    case UpdateKind::CgGaussian: return "cg-gaussian";
    case UpdateKind::Sparse: return "sparse";
    case UpdateKind::PseudoData: return "pseudo-data";
    case UpdateKind::WeightSpace: return "weight-space";
    case UpdateKind::LocationScale: return "location-scale";
  }
  return "?";
}

std::vector<SamplerVariant> default_variants() {
  std::vector<SamplerVariant> out;
  for (const char* name : {"exact+gaussian", "rff+gaussian", "rff+cg-gaussian", "rff+sparse",
                           "rff+pseudo-data", "rff+weight-space", "location-scale"})
    out.push_back(SamplerVariant::parse(name));
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Matrix uniform_points(Index n, Index d, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix X(n, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) X(i, j) = unit(rng);
  return X;
}

Matrix root_of(const Matrix& cov) {
  try {
    return linalg::cholesky(cov).L;
  } catch (const NotPositiveDefinite&) {
    return linalg::psd_sqrt(cov);
  }
}

// Optimal variational q(u) for a Gaussian likelihood.
InducingMoments optimal_inducing(const Kernel& kernel, const Dataset& data, const Locations& Z) {
  const Matrix Kmm = kernel.eval(Z);
  const Matrix Kmn = kernel.eval(Z, data.X);
  Matrix A = Kmm + Kmn * Kmn.transpose() / data.noise_variance;
  const auto factor = linalg::cholesky(A);
  InducingMoments q;
  q.mean = Kmm * linalg::solve_psd(factor, Vector(Kmn * data.y)) / data.noise_variance;
  q.covariance = Kmm * linalg::solve_psd(factor, Kmm);
  q.covariance = 0.5 * (q.covariance + q.covariance.transpose());
  return q;
}

using Generator = std::function<Matrix(Index, Rng&)>;

struct Problem {
  Kernel kernel;
  Dataset data;
  Locations Z;
  Locations X_test;
};

Generator prepare(const SamplerVariant& v, const Problem& p, const AccuracyCostConfig& cfg,
                  Rng& rng) {
  const Kernel& kernel = p.kernel;
  const Index n = p.data.size();
  const Index m = p.Z.rows();

  if (v.update == UpdateKind::LocationScale) {
    const GaussianMoments post = posterior_moments(kernel, p.data, p.X_test);
    const Matrix root = root_of(post.covariance);
    return [post, root](Index count, Rng& r) -> Matrix {
      return ((root * standard_normal(post.size(), count, r)).colwise() + post.mean).transpose();
    };
  }

  // Prior draws.
  std::function<std::vector<PriorPath>(Index, Rng&)> prior;
  if (v.prior == PriorKind::Exact) {
    Locations P(n + p.X_test.rows(), kernel.dim());
    P << p.data.X, p.X_test;
    const Matrix L = linalg::cholesky(kernel.eval(P)).L;
    auto support = std::make_shared<const TabulatedSupport>(P);
    prior = [L, support](Index count, Rng& r) {
      const Matrix draws = L * standard_normal(L.rows(), count, r);
      std::vector<PriorPath> out;
      out.reserve(static_cast<std::size_t>(count));
      for (Index s = 0; s < count; ++s) out.push_back(PriorPath::tabulated(support, draws.col(s)));
      return out;
    };
  } else {
    const auto basis = build_rff_basis(kernel, cfg.features, rng);
    prior = [basis](Index count, Rng& r) { return sample_prior_path(basis, count, r); };
  }

  const Locations X_test = p.X_test;
  if (v.update == UpdateKind::WeightSpace) {
    const Dataset data = p.data;
    const double reg = cfg.noise_variance;
    return [prior, data, reg, X_test](Index count, Rng& r) {
      return eval_paths(weight_space_update(prior(count, r), data, reg, &r), X_test);
    };
  }

  SolverChoice solver = DirectCholesky{};
  if (v.update == UpdateKind::CgGaussian)
    solver = ConjugateGradients{cfg.cg_tol, 0, cfg.cg_precond_rank};

  std::shared_ptr<const ConditioningSystem> system;
  std::function<std::pair<Matrix, Matrix>(Index, Rng&)> targets;
  const double sd = std::sqrt(cfg.noise_variance);
  switch (v.update) {
    case UpdateKind::Canonical:
    case UpdateKind::Gaussian:
    case UpdateKind::CgGaussian: {
      const bool noisy = v.update != UpdateKind::Canonical;
      system = std::make_shared<const ConditioningSystem>(
          kernel, p.data.X, Vector::Constant(n, noisy ? cfg.noise_variance : 0.0), solver);
      const Vector y = p.data.y;
      targets = [y, noisy, sd](Index count, Rng& r) {
        Matrix eps = noisy ? Matrix(sd * standard_normal(y.size(), count, r))
                           : Matrix(Matrix::Zero(y.size(), count));
        return std::make_pair(Matrix(y.replicate(1, count)), std::move(eps));
      };
      break;
    }
    case UpdateKind::Sparse: {
      const InducingMoments q = optimal_inducing(kernel, p.data, p.Z);
      const Matrix root = root_of(q.covariance);
      system = std::make_shared<const ConditioningSystem>(kernel, p.Z, Vector::Zero(m), solver);
      targets = [q, root](Index count, Rng& r) {
        Matrix U = (root * standard_normal(q.mean.size(), count, r)).colwise() + q.mean;
        return std::make_pair(std::move(U), Matrix(Matrix::Zero(q.mean.size(), count)));
      };
      break;
    }
    case UpdateKind::PseudoData: {
      system = std::make_shared<const ConditioningSystem>(
          kernel, p.Z, Vector::Constant(m, cfg.noise_variance), solver);
      // Pseudo-data are the observations at the subsampled locations.
      const Vector y_tilde = p.data.y.head(m);
      targets = [y_tilde, sd](Index count, Rng& r) {
        Matrix eps = sd * standard_normal(y_tilde.size(), count, r);
        return std::make_pair(Matrix(y_tilde.replicate(1, count)), std::move(eps));
      };
      break;
    }
    default:
      throw InvalidArgument("accuracy-cost: unhandled variant");
  }
  if (std::holds_alternative<DirectCholesky>(solver)) system->factor();
  return [prior, system, targets, X_test](Index count, Rng& r) {
    auto paths = prior(count, r);
    auto [T, E] = targets(count, r);
    return eval_paths(pathwise_update(paths, system, T, E), X_test);
  };
}

struct Measurement {
  double time_cached = kNaN;
  double time_uncached = kNaN;
  double w2 = kNaN;
};

Measurement measure(const Generator& gen, double setup_time, const AccuracyCostConfig& cfg,
                    const GaussianMoments* truth, Rng& rng) {
  MomentAccumulator acc(truth ? truth->size() : 0);
  double gen_time = 0.0;
  for (Index done = 0; done < cfg.samples;) {
    const Index count = std::min(cfg.chunk, cfg.samples - done);
    const auto start = std::chrono::steady_clock::now();
    const Matrix draws = gen(count, rng);
    gen_time += seconds_since(start);
    if (!draws.allFinite()) throw SolveFailure("accuracy-cost: non-finite sample");
    if (truth) acc.add(draws);
    done += count;
  }
  Measurement out;
  out.time_cached = cfg.record_wall_time ? gen_time : 0.0;
  out.time_uncached = cfg.record_wall_time ? setup_time + gen_time : 0.0;
  if (truth) out.w2 = w2_gaussian(acc.moments(), *truth);
  return out;
}

}  // namespace

std::string SamplerVariant::name() const {
  if (update == UpdateKind::LocationScale) return update_name(update);
  return std::string(prior == PriorKind::Exact ? "exact+" : "rff+") + update_name(update);
}

SamplerVariant SamplerVariant::parse(const std::string& text) {
  SamplerVariant v;
  if (text == "location-scale") {
    v.prior = PriorKind::Exact;
    v.update = UpdateKind::LocationScale;
    return v;
  }
  const auto plus = text.find('+');
  if (plus == std::string::npos)
    throw InvalidArgument("variant '" + text + "': expected <exact|rff>+<update>");
  const std::string p = text.substr(0, plus), u = text.substr(plus + 1);
  if (p == "exact")
    v.prior = PriorKind::Exact;
  else if (p == "rff")
    v.prior = PriorKind::Rff;
  else
    throw InvalidArgument("variant '" + text + "': unknown prior '" + p + "'");
  for (auto kind : {UpdateKind::Canonical, UpdateKind::Gaussian, UpdateKind::CgGaussian,
                    UpdateKind::Sparse, UpdateKind::PseudoData, UpdateKind::WeightSpace}) {
    if (u == update_name(kind)) {
      v.update = kind;
      return v;
    }
  }
  throw InvalidArgument("variant '" + text + "': unknown update '" + u + "'");
}

AccuracyCostConfig AccuracyCostConfig::from(const KeyValueConfig& kv) {
  AccuracyCostConfig c;
  c.dim = kv.get_int("dim", c.dim);
  if (c.dim < 1) throw InvalidArgument("accuracy-cost: dim must be positive");
  c.kernel = read_kernel(kv, c.dim, KernelConfig{c.kernel.family, {0.1}, 1.0});
  c.noise_variance = kv.get_double("noise_variance", c.noise_variance);
  const auto to_index = [](const std::vector<std::int64_t>& v) {
    return std::vector<Index>(v.begin(), v.end());
  };
  c.n_train = to_index(kv.get_ints("n_train", {16, 64, 256}));
  c.n_test = to_index(kv.get_ints("n_test", {1024}));
  c.features = kv.get_int("features", c.features);
  c.inducing = kv.get_int("inducing", c.inducing);
  for (const auto& name : kv.get_strings("variants", {})) c.variants.push_back(SamplerVariant::parse(name));
  if (c.variants.empty()) c.variants = default_variants();
  c.samples = kv.get_int("samples", c.samples);
  c.repeats = kv.get_int("repeats", c.repeats);
  c.chunk = kv.get_int("chunk", c.chunk);
  c.cg_tol = kv.get_double("cg_tol", c.cg_tol);
  c.cg_precond_rank = kv.get_int("cg_precond_rank", c.cg_precond_rank);
  c.grade = kv.get_bool("grade", c.grade);
  c.record_wall_time = kv.get_bool("record_wall_time", c.record_wall_time);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  return c;
}

void AccuracyCostConfig::validate() const {
  if (dim < 1) throw InvalidArgument("accuracy-cost: dim must be positive");
  if (static_cast<Index>(kernel.lengthscales.size()) != dim)
    throw InvalidArgument("accuracy-cost: kernel dimension does not match dim");
  Kernel{kernel};
  if (!(noise_variance >= 0.0)) throw InvalidArgument("accuracy-cost: noise_variance must be >= 0");
  if (n_train.empty() || n_test.empty()) throw InvalidArgument("accuracy-cost: empty n ladder");
  for (auto n : n_train)
    if (n < 1) throw InvalidArgument("accuracy-cost: n_train entries must be positive");
  for (auto n : n_test)
    if (n < 1) throw InvalidArgument("accuracy-cost: n_test entries must be positive");
  if (features < 1 || inducing < 1 || repeats < 1 || chunk < 1 || cg_precond_rank < 0)
    throw InvalidArgument("accuracy-cost: counts must be positive");
  if (samples < 2) throw InvalidArgument("accuracy-cost: samples must be at least 2");
  if (!(cg_tol > 0.0)) throw InvalidArgument("accuracy-cost: cg_tol must be positive");
  if (variants.empty()) throw InvalidArgument("accuracy-cost: no variants");
  for (const auto& v : variants) {
    const bool noisy = noise_variance > 0.0;
    if (v.update == UpdateKind::Canonical && noisy)
      throw InvalidArgument("accuracy-cost: " + v.name() + " requires noise_variance = 0");
    if ((v.update == UpdateKind::Gaussian || v.update == UpdateKind::CgGaussian ||
         v.update == UpdateKind::Sparse || v.update == UpdateKind::PseudoData) && !noisy)
      throw InvalidArgument("accuracy-cost: " + v.name() + " requires noise_variance > 0");
    if (v.update == UpdateKind::WeightSpace && v.prior != PriorKind::Rff)
      throw InvalidArgument("accuracy-cost: weight-space updates need the rff prior");
    if (v.prior == PriorKind::Rff && v.update != UpdateKind::LocationScale &&
        !has_spectral_density(kernel.family))
      throw UnsupportedFamily("accuracy-cost: " + std::string(to_string(kernel.family)) +
                              " has no spectral density");
  }
}

ConfigDigest AccuracyCostConfig::digest() const {
  ConfigDigest d;
  std::vector<std::string> names;
  for (const auto& v : variants) names.push_back(v.name());
  d.add("dim", std::int64_t{dim})
      .add("kernel", kernel)
      .add("noise_variance", noise_variance)
      .add("n_train", std::vector<std::int64_t>(n_train.begin(), n_train.end()))
      .add("n_test", std::vector<std::int64_t>(n_test.begin(), n_test.end()))
      .add("features", std::int64_t{features})
      .add("inducing", std::int64_t{inducing})
      .add("variants", names)
      .add("samples", std::int64_t{samples})
      .add("repeats", std::int64_t{repeats})
      .add("chunk", std::int64_t{chunk})
      .add("cg_tol", cg_tol)
      .add("cg_precond_rank", std::int64_t{cg_precond_rank})
      .add("grade", std::int64_t{grade})
      .add("record_wall_time", std::int64_t{record_wall_time})
      .add("seed", std::to_string(seed));
  return d;
}

std::vector<AccuracyCostRow> run_accuracy_cost(const AccuracyCostConfig& cfg) {
  cfg.validate();
  const Kernel kernel(cfg.kernel);
  const std::size_t V = cfg.variants.size();
  std::vector<AccuracyCostRow> rows;

  for (std::size_t a = 0; a < cfg.n_train.size(); ++a) {
    for (std::size_t b = 0; b < cfg.n_test.size(); ++b) {
      const Index n = cfg.n_train[a], n_test = cfg.n_test[b];
      std::vector<std::vector<double>> cached(V), uncached(V), w2(V);
      std::vector<double> floors;
      std::vector<std::string> status(V, "ok");

      for (Index rep = 0; rep < cfg.repeats; ++rep) {
        const std::uint64_t task =
            (static_cast<std::uint64_t>(a) * cfg.n_test.size() + b) * cfg.repeats + rep;
        Rng rng(split_stream(cfg.seed, task));
        Problem p{kernel, Dataset{uniform_points(n, cfg.dim, rng), Vector(), cfg.noise_variance},
                  Locations(), uniform_points(n_test, cfg.dim, rng)};
        p.data.y = sample_exact(kernel, p.data.X, 1, rng).row(0).transpose();
        if (cfg.noise_variance > 0.0)
          p.data.y += std::sqrt(cfg.noise_variance) * standard_normal(n, rng);
        // Training locations are already in random order; the first m are the subsample.
        p.Z = p.data.X.topRows(std::min(cfg.inducing, n));

        std::optional<GaussianMoments> truth;
        if (cfg.grade) {
          try {
            truth = posterior_moments(kernel, p.data, p.X_test);
            const Matrix root = root_of(truth->covariance);
            const GaussianMoments t = *truth;
            const Generator exact = [&t, &root](Index count, Rng& r) -> Matrix {
              return ((root * standard_normal(t.size(), count, r)).colwise() + t.mean).transpose();
            };
            Rng floor_rng(split_stream(derive_seed(cfg.seed, task), V));
            floors.push_back(measure(exact, 0.0, cfg, &*truth, floor_rng).w2);
          } catch (const Error& e) {
            // Without a reference there is nothing to grade against.
            for (auto& st : status)
              if (st == "ok") st = e.tag();
            continue;
          }
        }

        for (std::size_t k = 0; k < V; ++k) {
          if (status[k] != "ok") continue;
          Rng vrng(split_stream(derive_seed(cfg.seed, task), k));
          try {
            const auto start = std::chrono::steady_clock::now();
            const Generator gen = prepare(cfg.variants[k], p, cfg, vrng);
            const double setup = seconds_since(start);
            const Measurement mres = measure(gen, setup, cfg, truth ? &*truth : nullptr, vrng);
            cached[k].push_back(mres.time_cached);
            uncached[k].push_back(mres.time_uncached);
            w2[k].push_back(mres.w2);
          } catch (const Error& e) {
            status[k] = e.tag();
          }
        }
      }

      for (std::size_t k = 0; k < V; ++k) {
        AccuracyCostRow row;
        row.variant = cfg.variants[k].name();
        row.n = n;
        row.n_test = n_test;
        row.repeats = cfg.repeats;
        row.status = status[k];
        if (status[k] == "ok") {
          row.time_cached = median(cached[k]);
          row.time_uncached = median(uncached[k]);
          row.w2 = cfg.grade ? median(w2[k]) : kNaN;
        } else {
          row.time_cached = row.time_uncached = row.w2 = kNaN;
        }
        row.w2_floor = cfg.grade && !floors.empty() ? median(floors) : kNaN;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_accuracy_cost_csv(std::ostream& out, const AccuracyCostConfig& cfg,
                             const std::vector<AccuracyCostRow>& rows) {
  CsvWriter csv(out, "pathwise.accuracy_cost", 1, cfg.digest().hash(),
                {"variant", "n", "n_test", "repeats", "time_cached_s", "time_uncached_s",
                 "w2_to_truth", "w2_floor", "status"});
  for (const auto& r : rows)
    csv.row({r.variant, std::int64_t{r.n}, std::int64_t{r.n_test}, std::int64_t{r.repeats},
             r.time_cached, r.time_uncached, r.w2, r.w2_floor, r.status});
}

}  // namespace pathwise::bench
