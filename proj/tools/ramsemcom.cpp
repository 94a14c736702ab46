// Copyright 2026 The ramsemcom Authors
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

// Command-line front end.
//
//   ramsemcom run      [--config F] [--policy P] [--seeds a..b] [--episodes N] [--out D] [--jobs J]
//                      [--checkpoints D]
//   ramsemcom compare  RUN_DIR... [--out D]
//   ramsemcom validate --config F
//   ramsemcom selftest
//
// Exit codes: 0 success, 1 runtime failure (e.g. training diverged),
// 2 usage or configuration error, 3 I/O error, 4 a check failed.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ramsemcom/harness/compare.hpp"
#include "ramsemcom/harness/config.hpp"
#include "ramsemcom/harness/experiment.hpp"
#include "ramsemcom/selftest.hpp"

namespace {

using namespace ramsemcom;
using namespace ramsemcom::harness;

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;
constexpr int kCheckFailed = 4;

std::optional<ExperimentConfig> resolve(const std::string& path,
                                        const std::vector<std::pair<std::string, std::string>>& overrides) {
  ConfigResult r = path.empty() ? parse_config("", overrides) : load_config(path, overrides);
  if (r.ok()) return r.config;
  for (const auto& e : r.errors) std::cerr << "config error: " << e << "\n";
  return std::nullopt;
}

int cmd_run(const std::string& config_path, const std::string& policy, const std::string& seeds,
            const std::string& episodes, const std::string& out, unsigned jobs, const std::string& checkpoints) {
  std::vector<std::pair<std::string, std::string>> overrides;
  // Seed precedence: --seeds, then RAMSEMCOM_SEED, then the config file.
  if (!seeds.empty()) {
    overrides.emplace_back("seeds", seeds);
  } else if (const char* env = std::getenv("RAMSEMCOM_SEED"); env && *env) {
    overrides.emplace_back("seeds", env);
  }
  if (!policy.empty()) overrides.emplace_back("policy", policy);
  if (!episodes.empty()) overrides.emplace_back("episodes", episodes);
  if (!out.empty()) overrides.emplace_back("output", out);
  auto config = resolve(config_path, overrides);
  if (!config) return kUsage;

  RunOptions opt;
  opt.out_dir = config->output;
  opt.jobs = jobs;
  opt.log = &std::cerr;
  if (!checkpoints.empty()) opt.checkpoint_dir = checkpoints;
  const auto result = run_experiment(*config, opt);
  std::cout << summary_text(*config, result) << "wrote " << opt.out_dir.string() << "\n";
  return result.invariant_violations == 0 ? kOk : kCheckFailed;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<LoadedRun> runs;
  for (const auto& d : dirs) runs.push_back(load_run(d));
  const auto cmp = compare_runs(std::move(runs));
  write_comparison(cmp, out);
  std::cout << comparison_table(cmp) << "wrote " << out << "\n";
  return cmp.all_pass() ? kOk : kCheckFailed;
}

int cmd_validate(const std::string& path) {
  auto config = resolve(path, {});
  if (!config) return kUsage;
  std::cout << echo_config(*config);
  return kOk;
}

int cmd_selftest() {
  bool ok = true;
  for (const auto& r : oracle::run_all()) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.pass;
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented semantic communication scheduler"};
  app.require_subcommand(1);

  std::string config_path, policy, seeds, episodes, out, checkpoints;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* run = app.add_subcommand("run", "train and evaluate one policy over a set of seeds");
  run->add_option("--config", config_path, "configuration file (defaults apply when omitted)");
  run->add_option("--policy", policy, "ppo, dqn, heuristic, random_k, fixed_k or no_retrieval");
  run->add_option("--seeds", seeds, "seed range a..b or comma list; overrides RAMSEMCOM_SEED");
  run->add_option("--episodes", episodes, "training episodes per seed");
  run->add_option("--out", out, "run directory");
  run->add_option("--jobs", jobs, "seeds trained in parallel");
  run->add_option("--checkpoints", checkpoints, "evaluate saved networks from this run directory; no training");

  std::vector<std::string> dirs;
  std::string compare_out = "comparison";
  auto* compare = app.add_subcommand("compare", "compare run directories");
  compare->add_option("runs", dirs, "run directories")->required();
  compare->add_option("--out", compare_out, "output directory for the table and curves");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a configuration file and print it resolved");
  validate->add_option("--config", validate_path, "configuration file")->required();

  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, policy, seeds, episodes, out, jobs, checkpoints);
    if (compare->parsed()) return cmd_compare(dirs, compare_out);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
