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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pathwise/bench/accuracy_cost.hpp"
#include "pathwise/bench/config.hpp"
#include "pathwise/bench/sde.hpp"
#include "pathwise/bench/thompson.hpp"

namespace {

using namespace pathwise;
using namespace pathwise::bench;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Flat key = value configuration file");
  cmd->add_option("--seed", c.seed, "Root seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output CSV path, '-' for stdout");
}

KeyValueConfig read_config(const Common& c) {
  return c.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config);
}

template <typename Write>
void emit(const std::string& path, Write&& write) {
  if (path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open output file " + path);
  write(out);
  if (!out) throw InvalidArgument("failed writing " + path);
}

std::string escape(std::string s) {
  for (auto& ch : s)
    if (ch == '"' || ch == '\n') ch = '\'';
  return s;
}

int fail(const std::string& code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=\"" << escape(message) << "\"\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pathwise Gaussian process sampling experiments"};
  app.require_subcommand(1);
  auto* bench = app.add_subcommand("bench", "Run an experiment harness");
  bench->require_subcommand(1);

  Common acc, ts, sde;
  auto* acc_cmd = bench->add_subcommand("accuracy-cost", "Sampler accuracy against cost");
  auto* ts_cmd = bench->add_subcommand("thompson", "Thompson sampling on prior draws");
  auto* sde_cmd = bench->add_subcommand("sde", "GP-drift SDE rollouts");
  add_common(acc_cmd, acc);
  add_common(ts_cmd, ts);
  add_common(sde_cmd, sde);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*acc_cmd) {
      const auto kv = read_config(acc);
      auto cfg = AccuracyCostConfig::from(kv);
      kv.check_consumed();
      if (acc.seed) cfg.seed = *acc.seed;
      const auto rows = run_accuracy_cost(cfg);
      emit(acc.out, [&](std::ostream& o) { write_accuracy_cost_csv(o, cfg, rows); });
    } else if (*ts_cmd) {
      const auto kv = read_config(ts);
      auto cfg = ThompsonConfig::from(kv);
      kv.check_consumed();
      if (ts.seed) cfg.seed = *ts.seed;
      const auto rows = run_thompson(cfg);
      emit(ts.out, [&](std::ostream& o) { write_thompson_csv(o, cfg, rows); });
    } else if (*sde_cmd) {
      const auto kv = read_config(sde);
      auto cfg = SdeExperimentConfig::from(kv);
      kv.check_consumed();
      if (sde.seed) cfg.seed = *sde.seed;
      const auto result = run_sde(cfg);
      emit(sde.out, [&](std::ostream& o) { write_sde_csv(o, cfg, result); });
    }
  } catch (const Error& e) {
    return fail(e.tag(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
