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

#include "pathwise/bench/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pathwise::bench {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || errno == ERANGE)
    throw InvalidArgument("config: key '" + key + "' expects a number, got '" + text + "'");
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno == ERANGE)
    throw InvalidArgument("config: key '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config: line " + std::to_string(number) + " has no '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument("config: line " + std::to_string(number) + " has no key");
    if (cfg.values_.count(key))
      throw InvalidArgument("config: duplicate key '" + key + "'");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const std::string* KeyValueConfig::lookup(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  read_.insert(key);
  return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = lookup(key);
  return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto* v = lookup(key);
  return v ? parse_double(key, *v) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* v = lookup(key);
  return v ? parse_int(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw InvalidArgument("config: key '" + key + "' expects a boolean, got '" + *v + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::int64_t> KeyValueConfig::get_ints(const std::string& key,
                                                   const std::vector<std::int64_t>& fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_int(key, item));
  return out;
}

std::vector<std::string> KeyValueConfig::get_strings(const std::string& key,
                                                     const std::vector<std::string>& fallback) const {
  const auto* v = lookup(key);
  return v ? split_list(*v) : fallback;
}

void KeyValueConfig::check_consumed() const {
  for (const auto& [key, value] : values_)
    if (!read_.count(key)) throw InvalidArgument("config: unknown key '" + key + "'");
}

KernelConfig read_kernel(const KeyValueConfig& cfg, Index dim, const KernelConfig& fallback) {
  KernelConfig out;
  out.family = parse_kernel_family(cfg.get_string("kernel", std::string(to_string(fallback.family))));
  out.lengthscales = cfg.get_doubles("lengthscale", fallback.lengthscales);
  if (out.lengthscales.size() == 1 && dim > 1)
    out.lengthscales.assign(static_cast<std::size_t>(dim), out.lengthscales.front());
  if (static_cast<Index>(out.lengthscales.size()) != dim)
    throw InvalidArgument("config: lengthscale needs 1 or " + std::to_string(dim) + " values");
  out.variance = cfg.get_double("variance", fallback.variance);
  Kernel{out};
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

ConfigDigest& ConfigDigest::add(const std::string& key, const std::string& value) {
  text_ += key + "=" + value + ";";
  return *this;
}

ConfigDigest& ConfigDigest::add(const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return add(key, std::string(buf));
}

ConfigDigest& ConfigDigest::add(const std::string& key, std::int64_t value) {
  return add(key, std::to_string(value));
}

ConfigDigest& ConfigDigest::add(const std::string& key, const std::vector<double>& values) {
  std::string joined;
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    joined += (joined.empty() ? "" : ",") + std::string(buf);
  }
  return add(key, joined);
}

ConfigDigest& ConfigDigest::add(const std::string& key, const std::vector<std::int64_t>& values) {
  std::string joined;
  for (auto v : values) joined += (joined.empty() ? "" : ",") + std::to_string(v);
  return add(key, joined);
}

ConfigDigest& ConfigDigest::add(const std::string& key, const std::vector<std::string>& values) {
  std::string joined;
  for (const auto& v : values) joined += (joined.empty() ? "" : ",") + v;
  return add(key, joined);
}

ConfigDigest& ConfigDigest::add(const std::string& key, const KernelConfig& kernel) {
  add(key + ".family", std::string(to_string(kernel.family)));
  add(key + ".lengthscales", kernel.lengthscales);
  return add(key + ".variance", kernel.variance);
}

}  // namespace pathwise::bench
