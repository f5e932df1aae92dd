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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pathwise/kernels.hpp"

namespace pathwise::bench {

/// Flat `key = value` records. `#` starts a comment; lists are comma
/// separated. Keys that are never read are reported by `check_consumed`.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::int64_t> get_ints(const std::string& key,
                                     const std::vector<std::int64_t>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  /// Throws InvalidArgument naming the first key that was set but never read.
  void check_consumed() const;

 private:
  const std::string* lookup(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
};

/// Reads `kernel`, `lengthscale` (one value or one per dimension) and
/// `variance`, with the given defaults.
KernelConfig read_kernel(const KeyValueConfig& cfg, Index dim, const KernelConfig& fallback);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& text);

/// Canonical `key=value;` listing used for hashing.
class ConfigDigest {
 public:
  ConfigDigest& add(const std::string& key, const std::string& value);
  ConfigDigest& add(const std::string& key, double value);
  ConfigDigest& add(const std::string& key, std::int64_t value);
  ConfigDigest& add(const std::string& key, const std::vector<double>& values);
  ConfigDigest& add(const std::string& key, const std::vector<std::int64_t>& values);
  ConfigDigest& add(const std::string& key, const std::vector<std::string>& values);
  ConfigDigest& add(const std::string& key, const KernelConfig& kernel);

  const std::string& text() const { return text_; }
  std::uint64_t hash() const { return fnv1a64(text_); }

 private:
  std::string text_;
};

std::string format_double(double value);

}  // namespace pathwise::bench
