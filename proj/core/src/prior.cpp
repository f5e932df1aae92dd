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

#include "pathwise/prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "vmath.hpp"

namespace pathwise {

namespace {

// Rows of X per feature-matrix block during evaluation.
constexpr Index kEvalBlock = 256;

}  // namespace

// ---------------------------------------------------------------------------
// Bases

Matrix FeatureBasis::jacobian(const Eigen::Ref<const Vector>&) const {
  throw InvalidArgument("FeatureBasis: this basis does not provide derivatives");
}

Matrix FeatureBasis::induced_covariance(const Locations& X, const Locations& Y) const {
  const Matrix PX = features(X);
  const Matrix PY = features(Y);
  return PX * weight_variances().asDiagonal() * PY.transpose();
}

FourierFeatureMap::FourierFeatureMap(Kernel kernel, Matrix frequencies, Vector phases)
    : kernel_(std::move(kernel)),
      frequencies_(std::move(frequencies)),
      phases_(std::move(phases)) {
  if (frequencies_.rows() < 1) throw InvalidArgument("FourierFeatureMap: need at least one feature");
  if (frequencies_.cols() != kernel_.dim())
    throw InvalidArgument("FourierFeatureMap: frequency dimension does not match kernel");
  if (phases_.size() != frequencies_.rows())
    throw InvalidArgument("FourierFeatureMap: one phase per frequency required");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (!(phases_.array() >= 0.0).all() || !(phases_.array() < two_pi).all())
    throw InvalidArgument("FourierFeatureMap: phases must lie in [0, 2π)");
  two_pi_freq_ = two_pi * frequencies_;
  amplitude_ = std::sqrt(2.0 * kernel_.variance() / static_cast<double>(size()));
}

Matrix FourierFeatureMap::features(const Locations& X) const {
  if (X.cols() != dim()) throw InvalidArgument("FourierFeatureMap: location dimension mismatch");
  Matrix arg = X * two_pi_freq_.transpose();
  arg.rowwise() += phases_.transpose();
  detail::scaled_cos_inplace(arg.data(), static_cast<std::size_t>(arg.size()), amplitude_);
  return arg;
}

Matrix FourierFeatureMap::jacobian(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) throw InvalidArgument("FourierFeatureMap: location dimension mismatch");
  const Vector arg = two_pi_freq_ * x + phases_;
  return (-amplitude_ * arg.array().sin()).matrix().asDiagonal() * two_pi_freq_;
}

KlBasis::KlBasis(Index dim, std::vector<Eigenfunction> eigenfunctions, Vector eigenvalues)
    : dim_(dim), eigenfunctions_(std::move(eigenfunctions)), eigenvalues_(std::move(eigenvalues)) {
  if (dim_ < 1) throw InvalidArgument("KlBasis: dimension must be positive");
  if (static_cast<Index>(eigenfunctions_.size()) != eigenvalues_.size())
    throw InvalidArgument("KlBasis: eigenfunction and eigenvalue counts differ");
  if (eigenvalues_.size() < 1) throw InvalidArgument("KlBasis: need at least one eigenpair");
  if (!(eigenvalues_.array() > 0.0).all())
    throw InvalidArgument("KlBasis: eigenvalues must be positive");
  for (Index i = 1; i < eigenvalues_.size(); ++i)
    if (eigenvalues_(i) > eigenvalues_(i - 1))
      throw InvalidArgument("KlBasis: eigenvalues must be sorted nonincreasing");
}

Matrix KlBasis::features(const Locations& X) const {
  if (X.cols() != dim_) throw InvalidArgument("KlBasis: location dimension mismatch");
  Matrix Phi(X.rows(), size());
  for (Index j = 0; j < size(); ++j)
    for (Index i = 0; i < X.rows(); ++i) Phi(i, j) = eigenfunctions_[j](X.row(i).transpose());
  return Phi;
}

std::shared_ptr<const KlBasis> KlBasis::truncated(Index count) const {
  if (count < 1 || count > size()) throw InvalidArgument("KlBasis::truncated: count out of range");
  return std::make_shared<const KlBasis>(
      dim_, std::vector<Eigenfunction>(eigenfunctions_.begin(), eigenfunctions_.begin() + count),
      eigenvalues_.head(count));
}

// ---------------------------------------------------------------------------
// Tabulated support

std::size_t TabulatedSupport::Hash::operator()(const std::vector<double>& key) const noexcept {
  std::size_t h = 0xcbf29ce484222325ull;
  for (double v : key) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h ^= std::hash<std::uint64_t>{}(bits) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

namespace {
std::vector<double> row_key(const Eigen::Ref<const Vector>& x) {
  std::vector<double> key(x.size());
  // + 0.0 folds -0.0 into 0.0 so exact equality and hashing agree.
  for (Index k = 0; k < x.size(); ++k) key[k] = x(k) + 0.0;
  return key;
}
}  // namespace

TabulatedSupport::TabulatedSupport(Locations points) : points_(std::move(points)) {
  index_.reserve(points_.rows());
  for (Index i = 0; i < points_.rows(); ++i)
    index_.emplace(row_key(points_.row(i).transpose()), i);
}

Index TabulatedSupport::find(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) return -1;
  const auto it = index_.find(row_key(x));
  return it == index_.end() ? -1 : it->second;
}

// ---------------------------------------------------------------------------
// Paths

PriorPath PriorPath::weight_space(std::shared_ptr<const FeatureBasis> basis, Vector weights) {
  if (!basis) throw InvalidArgument("PriorPath: null basis");
  if (weights.size() != basis->size())
    throw InvalidArgument("PriorPath: weight count does not match basis size");
  return PriorPath(WeightSpace{std::move(basis), std::move(weights)});
}

PriorPath PriorPath::tabulated(std::shared_ptr<const TabulatedSupport> support, Vector values) {
  if (!support) throw InvalidArgument("PriorPath: null support");
  if (values.size() != support->size())
    throw InvalidArgument("PriorPath: value count does not match support size");
  return PriorPath(Tabulated{std::move(support), std::move(values)});
}

Index PriorPath::dim() const {
  if (const auto* ws = std::get_if<WeightSpace>(&repr_)) return ws->basis->dim();
  return std::get<Tabulated>(repr_).support->dim();
}

Vector PriorPath::evaluate(const Locations& X) const {
  if (X.rows() > 0 && X.cols() != dim())
    throw InvalidArgument("PriorPath::evaluate: location dimension mismatch");
  Vector out(X.rows());
  if (X.rows() == 0) return out;
  if (const auto* ws = std::get_if<WeightSpace>(&repr_)) {
    for (Index b = 0; b < X.rows(); b += kEvalBlock) {
      const Index len = std::min(kEvalBlock, X.rows() - b);
      out.segment(b, len).noalias() = ws->basis->features(X.middleRows(b, len)) * ws->weights;
    }
  } else {
    const auto& tab = std::get<Tabulated>(repr_);
    for (Index i = 0; i < X.rows(); ++i) {
      const Index j = tab.support->find(X.row(i).transpose());
      if (j < 0)
        throw InvalidArgument("PriorPath::evaluate: tabulated path queried off its support");
      out(i) = tab.values(j);
    }
  }
  if (mean_)
    for (Index i = 0; i < X.rows(); ++i) out(i) += mean_(X.row(i).transpose());
  return out;
}

Vector PriorPath::gradient(const Eigen::Ref<const Vector>& x) const {
  const auto* ws = std::get_if<WeightSpace>(&repr_);
  if (!ws) throw InvalidArgument("PriorPath::gradient: tabulated paths are not differentiable");
  if (mean_) throw InvalidArgument("PriorPath::gradient: mean functions carry no derivative");
  return ws->basis->jacobian(x).transpose() * ws->weights;
}

const std::shared_ptr<const FeatureBasis>& PriorPath::basis() const {
  const auto* ws = std::get_if<WeightSpace>(&repr_);
  if (!ws) throw InvalidArgument("PriorPath: not a weight-space path");
  return ws->basis;
}

const Vector& PriorPath::weights() const {
  const auto* ws = std::get_if<WeightSpace>(&repr_);
  if (!ws) throw InvalidArgument("PriorPath: not a weight-space path");
  return ws->weights;
}

const std::shared_ptr<const TabulatedSupport>& PriorPath::support() const {
  const auto* tab = std::get_if<Tabulated>(&repr_);
  if (!tab) throw InvalidArgument("PriorPath: not a tabulated path");
  return tab->support;
}

const Vector& PriorPath::values() const {
  const auto* tab = std::get_if<Tabulated>(&repr_);
  if (!tab) throw InvalidArgument("PriorPath: not a tabulated path");
  return tab->values;
}

PriorPath PriorPath::with_mean(MeanFunction mean) const {
  PriorPath out = *this;
  out.mean_ = std::move(mean);
  return out;
}

Vector eval_path(const PriorPath& path, const Locations& X) { return path.evaluate(X); }

Matrix eval_paths(const std::vector<PriorPath>& paths, const Locations& X) {
  const std::size_t S = paths.size();
  Matrix out(static_cast<Index>(S), X.rows());
  const TabulatedSupport* cached_support = nullptr;
  std::vector<Index> rows;
  std::size_t s = 0;
  while (s < S) {
    const PriorPath& p = paths[s];
    const Index r = static_cast<Index>(s);
    if (p.has_mean() || (X.rows() > 0 && X.cols() != p.dim())) {
      out.row(r) = p.evaluate(X).transpose();
      ++s;
    } else if (p.is_weight_space()) {
      // Consecutive paths on one basis share the feature matrix.
      std::size_t e = s + 1;
      while (e < S && paths[e].is_weight_space() && !paths[e].has_mean() &&
             paths[e].basis() == p.basis())
        ++e;
      Matrix W(p.basis()->size(), static_cast<Index>(e - s));
      for (std::size_t k = s; k < e; ++k) W.col(static_cast<Index>(k - s)) = paths[k].weights();
      for (Index b = 0; b < X.rows(); b += kEvalBlock) {
        const Index len = std::min(kEvalBlock, X.rows() - b);
        out.block(r, b, W.cols(), len).noalias() =
            W.transpose() * p.basis()->features(X.middleRows(b, len)).transpose();
      }
      s = e;
    } else {
      if (p.support().get() != cached_support) {
        cached_support = p.support().get();
        rows.assign(static_cast<std::size_t>(X.rows()), 0);
        for (Index i = 0; i < X.rows(); ++i) {
          rows[static_cast<std::size_t>(i)] = cached_support->find(X.row(i).transpose());
          if (rows[static_cast<std::size_t>(i)] < 0)
            throw InvalidArgument("eval_paths: tabulated path queried off its support");
        }
      }
      for (Index i = 0; i < X.rows(); ++i) out(r, i) = p.values()(rows[static_cast<std::size_t>(i)]);
      ++s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact sampling

Matrix sample_exact(const Kernel& kernel, const Locations& X, Index count, Rng& rng) {
  if (X.rows() < 1) throw InvalidArgument("sample_exact: need at least one location");
  if (count < 0) throw InvalidArgument("sample_exact: negative sample count");
  const auto factor = linalg::cholesky(kernel.eval(X));
  const Matrix Z = standard_normal(count, X.rows(), rng);
  return Z * factor.L.transpose();
}

std::vector<PriorPath> tabulate(const Locations& X, const Matrix& draws) {
  if (draws.cols() != X.rows()) throw InvalidArgument("tabulate: draw width does not match locations");
  auto support = std::make_shared<const TabulatedSupport>(X);
  std::vector<PriorPath> paths;
  paths.reserve(draws.rows());
  for (Index s = 0; s < draws.rows(); ++s)
    paths.push_back(PriorPath::tabulated(support, draws.row(s).transpose()));
  return paths;
}

GaussianMoments exact_conditional_moments(const Kernel& kernel, const Locations& X_done,
                                          const Vector& f_done, const Locations& X_new) {
  if (X_done.rows() < 1) throw InvalidArgument("exact_conditional_moments: X_done is empty");
  if (f_done.size() != X_done.rows())
    throw InvalidArgument("exact_conditional_moments: f_done length does not match X_done");
  const auto factor = linalg::cholesky(kernel.eval(X_done));
  const Matrix K_dn = kernel.eval(X_done, X_new);
  const Matrix V = factor.L.triangularView<Eigen::Lower>().solve(K_dn);
  const Vector a = factor.L.triangularView<Eigen::Lower>().solve(f_done);
  GaussianMoments out;
  out.mean = V.transpose() * a;
  out.covariance = kernel.eval(X_new);
  out.covariance.noalias() -= V.transpose() * V;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

Vector sample_exact_conditional(const Kernel& kernel, const Locations& X_done,
                                const Vector& f_done, const Locations& X_new, Rng& rng) {
  if (X_done.rows() < 1) throw InvalidArgument("sample_exact_conditional: X_done is empty");
  if (f_done.size() != X_done.rows())
    throw InvalidArgument("sample_exact_conditional: f_done length does not match X_done");
  if (X_new.cols() != kernel.dim())
    throw InvalidArgument("sample_exact_conditional: X_new dimension mismatch");

  // Exact repeats of conditioned points collapse to their known values.
  const TabulatedSupport known(X_done);
  Vector out(X_new.rows());
  std::vector<Index> fresh;
  for (Index i = 0; i < X_new.rows(); ++i) {
    const Index j = known.find(X_new.row(i).transpose());
    if (j >= 0) out(i) = f_done(j);
    else fresh.push_back(i);
  }
  if (fresh.empty()) return out;

  Locations X_fresh(static_cast<Index>(fresh.size()), X_new.cols());
  for (std::size_t r = 0; r < fresh.size(); ++r) X_fresh.row(r) = X_new.row(fresh[r]);
  const GaussianMoments cond = exact_conditional_moments(kernel, X_done, f_done, X_fresh);

  Matrix root;
  try {
    root = linalg::cholesky(cond.covariance).L;
  } catch (const NotPositiveDefinite&) {
    root = linalg::psd_sqrt(cond.covariance);
  }
  const Vector draw = cond.mean + root * standard_normal(X_fresh.rows(), rng);
  for (std::size_t r = 0; r < fresh.size(); ++r) out(fresh[r]) = draw(r);
  return out;
}

// ---------------------------------------------------------------------------
// Sequential sampler

SequentialSampler::SequentialSampler(Kernel kernel, Index channels, double nugget)
    : kernel_(std::move(kernel)), channels_(channels), nugget_(nugget) {
  if (channels_ < 1) throw InvalidArgument("SequentialSampler: need at least one channel");
  if (!(nugget_ >= 0.0)) throw InvalidArgument("SequentialSampler: nugget must be nonnegative");
  reserve(64);
}

void SequentialSampler::reserve(Index capacity) {
  if (capacity <= L_.rows()) return;
  Matrix L = Matrix::Zero(capacity, capacity);
  Matrix alpha = Matrix::Zero(capacity, channels_);
  Locations points(capacity, kernel_.dim());
  Matrix values(capacity, channels_);
  if (size_ > 0) {
    L.topLeftCorner(size_, size_) = L_.topLeftCorner(size_, size_);
    alpha.topRows(size_) = alpha_.topRows(size_);
    points.topRows(size_) = points_.topRows(size_);
    values.topRows(size_) = values_.topRows(size_);
  }
  L_ = std::move(L);
  alpha_ = std::move(alpha);
  points_ = std::move(points);
  values_ = std::move(values);
}

Vector SequentialSampler::append(const Eigen::Ref<const Vector>& x, const Vector* known, Rng* rng) {
  if (x.size() != kernel_.dim()) throw InvalidArgument("SequentialSampler: dimension mismatch");
  for (Index i = 0; i < size_; ++i)
    if ((points_.row(i).transpose().array() == x.array()).all()) return values_.row(i).transpose();

  if (size_ == L_.rows()) reserve(std::max<Index>(2 * size_, 64));
  const Index n = size_;
  const Locations xr = x.transpose();
  Vector l = kernel_.eval(points_.topRows(n), xr).col(0);
  if (n > 0) L_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solveInPlace(l);

  const double var = std::max(0.0, kernel_.variance() - l.squaredNorm());
  const double pivot = std::sqrt(var + nugget_ * kernel_.variance());
  const Vector mean = n > 0 ? Vector(alpha_.topRows(n).transpose() * l) : Vector::Zero(channels_);

  Vector value(channels_);
  if (known) {
    value = *known;
  } else {
    std::normal_distribution<double> normal;
    const double sd = std::sqrt(var);
    for (Index c = 0; c < channels_; ++c) value(c) = mean(c) + sd * normal(*rng);
  }

  L_.block(n, 0, 1, n) = l.transpose();
  L_(n, n) = pivot;
  alpha_.row(n) = ((value - mean) / pivot).transpose();
  points_.row(n) = x.transpose();
  values_.row(n) = value.transpose();
  ++size_;
  return value;
}

void SequentialSampler::condition(const Locations& X, const Matrix& values) {
  if (values.rows() != X.rows() || values.cols() != channels_)
    throw InvalidArgument("SequentialSampler::condition: values must be n x channels");
  reserve(size_ + X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const Vector v = values.row(i).transpose();
    append(X.row(i).transpose(), &v, nullptr);
  }
}

Vector SequentialSampler::sample_point(const Eigen::Ref<const Vector>& x, Rng& rng) {
  return append(x, nullptr, &rng);
}

Matrix SequentialSampler::sample(const Locations& X, Rng& rng) {
  reserve(size_ + X.rows());
  Matrix out(X.rows(), channels_);
  for (Index i = 0; i < X.rows(); ++i) out.row(i) = append(X.row(i).transpose(), nullptr, &rng).transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Approximate priors

std::shared_ptr<const FourierFeatureMap> build_rff_basis(const Kernel& kernel, Index num_features,
                                                         Rng& rng) {
  if (num_features < 1) throw InvalidArgument("build_rff_basis: need at least one feature");
  const SpectralSampler sampler(kernel);
  Matrix omega = sampler.sample(num_features, rng);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  Vector tau(num_features);
  for (Index j = 0; j < num_features; ++j) {
    tau(j) = uniform(rng);
    if (tau(j) >= 2.0 * std::numbers::pi) tau(j) = 0.0;
  }
  return std::make_shared<const FourierFeatureMap>(kernel, std::move(omega), std::move(tau));
}

std::vector<PriorPath> sample_prior_path(const std::shared_ptr<const FeatureBasis>& basis,
                                         Index count, Rng& rng) {
  if (!basis) throw InvalidArgument("sample_prior_path: null basis");
  const Vector sd = basis->weight_variances().cwiseSqrt();
  std::vector<PriorPath> paths;
  paths.reserve(count);
  for (Index s = 0; s < count; ++s)
    paths.push_back(PriorPath::weight_space(basis, standard_normal(basis->size(), rng).cwiseProduct(sd)));
  return paths;
}

PriorPath build_kl_path(const std::shared_ptr<const KlBasis>& basis, Rng& rng) {
  if (!basis) throw InvalidArgument("build_kl_path: null basis");
  return sample_prior_path(basis, 1, rng).front();
}

}  // namespace pathwise
