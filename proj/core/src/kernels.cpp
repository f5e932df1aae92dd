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

#include "pathwise/kernels.hpp"

#include <cmath>
#include <numbers>

#include "vmath.hpp"

namespace pathwise {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.2360679774997896;

double matern_nu(KernelFamily family) {
  switch (family) {
    case KernelFamily::Matern12: return 0.5;
    case KernelFamily::Matern32: return 1.5;
    case KernelFamily::Matern52: return 2.5;
    default: return 0.0;
  }
}

// Elementwise profile on an array of squared scaled distances.
template <typename A>
A profile_array(KernelFamily family, double variance, const A& r2) {
  A out(r2.rows(), r2.cols());
  const auto n = static_cast<std::size_t>(r2.size());
  static constexpr double m12[3] = {1.0, 0.0, 0.0};
  static constexpr double m32[3] = {1.0, 1.0, 0.0};
  static constexpr double m52[3] = {1.0, 1.0, 1.0 / 3.0};
  switch (family) {
    case KernelFamily::SquaredExponential:
      detail::scaled_exp(r2.data(), n, -0.5, variance, out.data());
      return out;
    case KernelFamily::Matern12:
      detail::poly_exp_profile(r2.data(), n, 1.0, m12, variance, out.data());
      return out;
    case KernelFamily::Matern32:
      detail::poly_exp_profile(r2.data(), n, kSqrt3, m32, variance, out.data());
      return out;
    case KernelFamily::Matern52:
      detail::poly_exp_profile(r2.data(), n, kSqrt5, m52, variance, out.data());
      return out;
    case KernelFamily::KroneckerDelta:
      break;
  }
  throw UnsupportedFamily("profile_array: delta kernel has no distance profile");
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExponential: return "squared_exponential";
    case KernelFamily::Matern12: return "matern12";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::KroneckerDelta: return "kronecker_delta";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "squared_exponential" || name == "se" || name == "rbf")
    return KernelFamily::SquaredExponential;
  if (name == "matern12") return KernelFamily::Matern12;
  if (name == "matern32") return KernelFamily::Matern32;
  if (name == "matern52") return KernelFamily::Matern52;
  if (name == "kronecker_delta" || name == "delta") return KernelFamily::KroneckerDelta;
  throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

bool has_spectral_density(KernelFamily family) {
  return family != KernelFamily::KroneckerDelta;
}

Kernel::Kernel(KernelFamily family, Vector lengthscales, double variance)
    : family_(family), lengthscales_(std::move(lengthscales)), variance_(variance) {
  if (lengthscales_.size() < 1)
    throw InvalidArgument("Kernel: need at least one input dimension");
  if (!(lengthscales_.array() > 0.0).all() || !lengthscales_.allFinite())
    throw InvalidArgument("Kernel: lengthscales must be strictly positive");
  if (!(variance_ > 0.0) || !std::isfinite(variance_))
    throw InvalidArgument("Kernel: variance must be strictly positive");
}

Kernel::Kernel(KernelFamily family, Index dim, double lengthscale, double variance)
    : Kernel(family, Vector::Constant(dim, lengthscale), variance) {}

Kernel::Kernel(const KernelConfig& config)
    : Kernel(config.family,
             Eigen::Map<const Vector>(config.lengthscales.data(),
                                      static_cast<Index>(config.lengthscales.size())),
             config.variance) {}

KernelConfig Kernel::config() const {
  return {family_, std::vector<double>(lengthscales_.begin(), lengthscales_.end()),
          variance_};
}

void Kernel::check_dim(Index cols, const char* what) const {
  if (cols != dim())
    throw InvalidArgument(std::string("Kernel: ") + what + " has " +
                          std::to_string(cols) + " columns, kernel dimension is " +
                          std::to_string(dim()));
}

double Kernel::profile(double r) const {
  switch (family_) {
    case KernelFamily::SquaredExponential: return variance_ * std::exp(-0.5 * r * r);
    case KernelFamily::Matern12: return variance_ * std::exp(-r);
    case KernelFamily::Matern32: {
      const double s = kSqrt3 * r;
      return variance_ * (1.0 + s) * std::exp(-s);
    }
    case KernelFamily::Matern52: {
      const double s = kSqrt5 * r;
      return variance_ * (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    case KernelFamily::KroneckerDelta: return r == 0.0 ? variance_ : 0.0;
  }
  return 0.0;
}

Eigen::ArrayXd Kernel::profile_squared(const Eigen::ArrayXd& r2) const {
  return profile_array(family_, variance_, r2);
}

double Kernel::operator()(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& y) const {
  check_dim(x.size(), "x");
  check_dim(y.size(), "y");
  if (family_ == KernelFamily::KroneckerDelta) return (x.array() == y.array()).all() ? variance_ : 0.0;
  const double r = ((x - y).array() / lengthscales_.array()).matrix().norm();
  return profile(r);
}

Matrix Kernel::eval(const Locations& X, const Locations& Y) const {
  check_dim(X.cols(), "X");
  check_dim(Y.cols(), "Y");
  const Index n = X.rows();
  const Index m = Y.rows();
  Matrix K(n, m);
  if (n == 0 || m == 0) return K;

  if (family_ == KernelFamily::KroneckerDelta) {
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i)
        K(i, j) = (X.row(i).array() == Y.row(j).array()).all() ? variance_ : 0.0;
    return K;
  }

  const Matrix Xs = X * lengthscales_.cwiseInverse().asDiagonal();
  const Matrix Ys = Y * lengthscales_.cwiseInverse().asDiagonal();
  // Differences are formed explicitly (no norm expansion) so that
  // k(x, x) is exactly the variance and shifted pairs agree to round-off.
  Eigen::ArrayXXd r2 = Eigen::ArrayXXd::Zero(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index k = 0; k < dim(); ++k)
      r2.col(j) += (Xs.col(k).array() - Ys(j, k)).square();
  K = profile_array(family_, variance_, r2).matrix();
  return K;
}

Matrix Kernel::gradient(const Eigen::Ref<const Vector>& x, const Locations& Z) const {
  check_dim(x.size(), "x");
  check_dim(Z.cols(), "Z");
  const Index m = Z.rows();
  Matrix G = Matrix::Zero(dim(), m);
  if (family_ == KernelFamily::KroneckerDelta) return G;

  const Vector inv_l2 = lengthscales_.array().square().inverse();
  for (Index j = 0; j < m; ++j) {
    const Vector diff = x - Z.row(j).transpose();
    const double r = (diff.array() / lengthscales_.array()).matrix().norm();
    // d k / d x = g(r) * (x - z) / l^2
    double g = 0.0;
    switch (family_) {
      case KernelFamily::SquaredExponential:
        g = -variance_ * std::exp(-0.5 * r * r);
        break;
      case KernelFamily::Matern12:
        g = r > 0.0 ? -variance_ * std::exp(-r) / r : 0.0;
        break;
      case KernelFamily::Matern32:
        g = -3.0 * variance_ * std::exp(-kSqrt3 * r);
        break;
      case KernelFamily::Matern52:
        g = -(5.0 / 3.0) * variance_ * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
        break;
      case KernelFamily::KroneckerDelta:
        break;
    }
    G.col(j) = g * diff.cwiseProduct(inv_l2);
  }
  return G;
}

SpectralSampler::SpectralSampler(Kernel kernel) : kernel_(std::move(kernel)) {
  if (!has_spectral_density(kernel_.family()))
    throw UnsupportedFamily("SpectralSampler: " + std::string(to_string(kernel_.family())) +
                            " kernel has no spectral density");
  nu_ = matern_nu(kernel_.family());
}

double SpectralSampler::density(const Eigen::Ref<const Vector>& omega) const {
  if (omega.size() != kernel_.dim())
    throw InvalidArgument("SpectralSampler::density: frequency dimension mismatch");
  using std::numbers::pi;
  const double d = static_cast<double>(kernel_.dim());
  const Vector& l = kernel_.lengthscales();
  const double l_prod = l.prod();
  // Density of the unit-lengthscale kernel at s = l * omega, times prod(l).
  const double s2 = (omega.array() * l.array()).square().sum();
  if (nu_ == 0.0) {
    return kernel_.variance() * l_prod * std::pow(2.0 * pi, d / 2.0) *
           std::exp(-2.0 * pi * pi * s2);
  }
  const double a = nu_ + d / 2.0;
  const double log_norm = d * std::log(2.0) + (d / 2.0) * std::log(pi) + std::lgamma(a) +
                          nu_ * std::log(2.0 * nu_) - std::lgamma(nu_);
  return kernel_.variance() * l_prod *
         std::exp(log_norm - a * std::log(2.0 * nu_ + 4.0 * pi * pi * s2));
}

Matrix SpectralSampler::sample(Index count, Rng& rng) const {
  if (count < 1) throw InvalidArgument("SpectralSampler::sample: count must be >= 1");
  using std::numbers::pi;
  const Index d = kernel_.dim();
  const Vector scale = (2.0 * pi * kernel_.lengthscales().array()).inverse();
  Matrix omega = standard_normal(count, d, rng);
  if (nu_ > 0.0) {
    // Multivariate Student-t with 2ν degrees of freedom: z * sqrt(2ν / χ²_{2ν}).
    std::chi_squared_distribution<double> chi2(2.0 * nu_);
    for (Index i = 0; i < count; ++i) omega.row(i) *= std::sqrt(2.0 * nu_ / chi2(rng));
  }
  return omega * scale.asDiagonal();
}

}  // namespace pathwise
