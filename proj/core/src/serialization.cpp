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

#include "pathwise/serialization.hpp"

#include <fstream>
#include <vector>

namespace pathwise {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) rows.push_back(vector_json(M.row(i).transpose()));
  return rows;
}

Matrix matrix_from(const json& j, Index cols) {
  if (!j.is_array()) throw InvalidArgument("deserialize: expected an array of rows");
  Matrix M(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < M.rows(); ++i) {
    const Vector row = vector_from(j.at(i));
    if (row.size() != cols) throw InvalidArgument("deserialize: ragged matrix");
    M.row(i) = row.transpose();
  }
  return M;
}

void check_version(const json& j, const char* what) {
  if (j.value("version", kSerializationVersion) != kSerializationVersion)
    throw InvalidArgument(std::string("deserialize ") + what + ": unsupported version");
}

template <typename F>
auto guarded(const char* what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("deserialize ") + what + ": " + e.what());
  }
}

}  // namespace

json to_json(const KernelConfig& config) {
  return json{{"family", std::string(to_string(config.family))},
              {"lengthscales", config.lengthscales},
              {"variance", config.variance}};
}

KernelConfig kernel_config_from_json(const json& j) {
  return guarded("kernel", [&] {
    KernelConfig c;
    c.family = parse_kernel_family(j.at("family").get<std::string>());
    c.lengthscales = j.at("lengthscales").get<std::vector<double>>();
    c.variance = j.at("variance").get<double>();
    Kernel{c};  // validates
    return c;
  });
}

json to_json(const FourierFeatureMap& basis) {
  return json{{"type", "fourier"},
              {"version", kSerializationVersion},
              {"feature_form", "cosine"},
              {"kernel", to_json(basis.kernel().config())},
              {"amplitude", basis.amplitude()},
              {"frequencies", matrix_json(basis.frequencies())},
              {"phases", vector_json(basis.phases())}};
}

std::shared_ptr<const FourierFeatureMap> fourier_basis_from_json(const json& j) {
  return guarded("basis", [&] {
    check_version(j, "basis");
    if (j.at("type") != "fourier" || j.at("feature_form") != "cosine")
      throw InvalidArgument("deserialize basis: only cosine Fourier bases are supported");
    const Kernel kernel(kernel_config_from_json(j.at("kernel")));
    auto basis = std::make_shared<const FourierFeatureMap>(
        kernel, matrix_from(j.at("frequencies"), kernel.dim()), vector_from(j.at("phases")));
    if (basis->amplitude() != j.at("amplitude").get<double>())
      throw InvalidArgument("deserialize basis: amplitude disagrees with kernel and size");
    return basis;
  });
}

json to_json(const PriorPath& path) {
  if (path.has_mean()) throw InvalidArgument("serialize: paths with a mean function are not supported");
  if (path.is_weight_space()) {
    const auto* rff = dynamic_cast<const FourierFeatureMap*>(path.basis().get());
    if (!rff) throw InvalidArgument("serialize: only Fourier bases are supported");
    return json{{"type", "weight_space"},
                {"version", kSerializationVersion},
                {"basis", to_json(*rff)},
                {"weights", vector_json(path.weights())}};
  }
  return json{{"type", "tabulated"},
              {"version", kSerializationVersion},
              {"points", matrix_json(path.support()->points())},
              {"dim", path.dim()},
              {"values", vector_json(path.values())}};
}

PriorPath prior_path_from_json(const json& j) {
  return guarded("prior path", [&] {
    check_version(j, "prior path");
    const auto type = j.at("type").get<std::string>();
    if (type == "weight_space")
      return PriorPath::weight_space(fourier_basis_from_json(j.at("basis")),
                                     vector_from(j.at("weights")));
    if (type == "tabulated") {
      auto support = std::make_shared<const TabulatedSupport>(
          matrix_from(j.at("points"), j.at("dim").get<Index>()));
      return PriorPath::tabulated(std::move(support), vector_from(j.at("values")));
    }
    throw InvalidArgument("deserialize prior path: unknown type " + type);
  });
}

json to_json(const PosteriorPath& path) {
  return json{{"type", "posterior"},
              {"version", kSerializationVersion},
              {"prior", to_json(path.prior())},
              {"kernel", to_json(path.kernel().config())},
              {"centers", matrix_json(path.centers())},
              {"center_noise", vector_json(path.system()->center_noise())},
              {"targets", vector_json(path.targets())},
              {"noise_draws", vector_json(path.noise_draws())},
              {"coefficients", vector_json(path.coefficients())}};
}

PosteriorPath posterior_path_from_json(const json& j) {
  return guarded("posterior path", [&] {
    check_version(j, "posterior path");
    const Kernel kernel(kernel_config_from_json(j.at("kernel")));
    auto system = std::make_shared<const ConditioningSystem>(
        kernel, matrix_from(j.at("centers"), kernel.dim()), vector_from(j.at("center_noise")));
    return PosteriorPath(prior_path_from_json(j.at("prior")), std::move(system),
                         vector_from(j.at("targets")), vector_from(j.at("noise_draws")),
                         vector_from(j.at("coefficients")));
  });
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("save_json: cannot open " + path);
  out << j.dump() << '\n';
  if (!out) throw InvalidArgument("save_json: write failed for " + path);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("load_json: cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("load_json: " + std::string(e.what()));
  }
}

}  // namespace pathwise
