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


#pragma once

#include <cstddef>

namespace pathwise::detail {

/// x[i] = scale * cos(x[i]). Uses the platform's vector math library
/// where available.
void scaled_cos_inplace(double* x, std::size_t n, double scale);

/// Cosine expansion at one point:
///   work[j] = cos(phase[j] + Σ_i freq[i n + j] x[i])   (freq is n x d, column major)
///   out[c]  = Σ_j weights[c n + j] work[j]             (weights is n x k, column major)
void cosine_expansion(const double* freq, const double* phase, const double* weights,
                      std::size_t n, std::size_t d, std::size_t k, const double* x,
                      double* work, double* out);

/// out[i] = scale * exp(rate * x[i]).
void scaled_exp(const double* x, std::size_t n, double rate, double scale, double* out);

/// Matérn-type profile at squared distances, with s = c sqrt(r2[i]):
///   out[i] = scale * (p[0] + p[1] s + p[2] s²) exp(-s).
void poly_exp_profile(const double* r2, std::size_t n, double c, const double* p, double scale,
                      double* out);

/// Soft minimum down each column of the column-major m x n matrix M:
///   out[i] = -eps log Σ_j exp((h[j] - M[i m + j]) / eps).
void soft_min_columns(const double* M, std::size_t m, std::size_t n, const double* h, double eps,
                      double* out);

}  // namespace pathwise::detail
