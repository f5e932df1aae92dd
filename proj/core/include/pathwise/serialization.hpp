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

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "pathwise/conditioning.hpp"
#include "pathwise/kernels.hpp"
#include "pathwise/prior.hpp"

namespace pathwise {

inline constexpr int kSerializationVersion = 1;

nlohmann::json to_json(const KernelConfig& config);
KernelConfig kernel_config_from_json(const nlohmann::json& j);

/// Fourier bases only; frequencies, phases, amplitude and kernel config.
nlohmann::json to_json(const FourierFeatureMap& basis);
std::shared_ptr<const FourierFeatureMap> fourier_basis_from_json(const nlohmann::json& j);

/// Weight-space paths over Fourier bases, or tabulated paths. Paths with a
/// mean function or a non-Fourier basis are rejected.
nlohmann::json to_json(const PriorPath& path);
PriorPath prior_path_from_json(const nlohmann::json& j);

/// Stores coefficients directly, so a loaded path evaluates bit-identically.
nlohmann::json to_json(const PosteriorPath& path);
PosteriorPath posterior_path_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

}  // namespace pathwise
