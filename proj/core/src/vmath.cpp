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


// Compiled with -ffast-math; see core/CMakeLists.txt.

#include "vmath.hpp"

#include <algorithm>
#include <cmath>

namespace pathwise::detail {

#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && defined(__linux__)
#define PATHWISE_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define PATHWISE_CLONES
#endif

PATHWISE_CLONES
void scaled_cos_inplace(double* x, std::size_t n, double scale) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) x[i] = scale * std::cos(x[i]);
}

PATHWISE_CLONES
void cosine_expansion(const double* freq, const double* phase, const double* weights,
                      std::size_t n, std::size_t d, std::size_t k, const double* x,
                      double* work, double* out) {
#pragma omp simd
  for (std::size_t j = 0; j < n; ++j) work[j] = phase[j] + (d > 0 ? freq[j] * x[0] : 0.0);
  for (std::size_t i = 1; i < d; ++i) {
    const double xi = x[i];
    const double* f = freq + i * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) work[j] += f[j] * xi;
  }
#pragma omp simd
  for (std::size_t j = 0; j < n; ++j) work[j] = std::cos(work[j]);
  for (std::size_t c = 0; c < k; ++c) {
    const double* w = weights + c * n;
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t j = 0; j < n; ++j) acc += w[j] * work[j];
    out[c] = acc;
  }
}

PATHWISE_CLONES
void scaled_exp(const double* x, std::size_t n, double rate, double scale, double* out) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) out[i] = scale * std::exp(std::max(rate * x[i], -700.0));
}

PATHWISE_CLONES
void poly_exp_profile(const double* r2, std::size_t n, double c, const double* p, double scale,
                      double* out) {
  const double p0 = p[0], p1 = p[1], p2 = p[2];
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    const double s = c * std::sqrt(r2[i]);
    out[i] = scale * (p0 + s * (p1 + s * p2)) * std::exp(std::max(-s, -700.0));
  }
}

PATHWISE_CLONES
void soft_min_columns(const double* M, std::size_t m, std::size_t n, const double* h, double eps,
                      double* out) {
  const double inv = 1.0 / eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double* col = M + i * m;
    double top = h[0] - col[0];
#pragma omp simd reduction(max : top)
    for (std::size_t j = 0; j < m; ++j) top = std::max(top, h[j] - col[j]);
    double sum = 0.0;
#pragma omp simd reduction(+ : sum)
    for (std::size_t j = 0; j < m; ++j)
      sum += std::exp(std::max((h[j] - col[j] - top) * inv, -700.0));
    out[i] = -(top + eps * std::log(sum));
  }
}

}  // namespace pathwise::detail
