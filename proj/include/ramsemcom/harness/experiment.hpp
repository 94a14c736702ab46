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

#pragma once

// Multi-seed experiment runs.
//
// A run directory holds:
//   config.txt          resolved configuration (parse_config(echo) round-trips)
//   train.csv           one metrics row per (seed, training episode, round)
//   eval.csv            one metrics row per (seed, evaluation episode, round)
//   summary.csv         per-seed aggregates, derivable from the two CSVs
//   summary.txt         across-seed mean, sd and standard error
//   checkpoint_s<N>.rlck  acting network per seed (learned policies only)
//
// Every file is a pure function of the configuration and seeds.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/harness/config.hpp"
#include "ramsemcom/rl/checkpoint.hpp"
#include "ramsemcom/rl/dqn.hpp"
#include "ramsemcom/rl/ppo.hpp"
#include "ramsemcom/scheduler_env.hpp"

namespace ramsemcom::harness {

inline constexpr std::string_view kMetricsHeader =
    "run_id,seed,episode,round,policy,reward,cumulative_tasks,bits_spent,budget_bits,k";

struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  std::size_t round = 0;
  std::string policy;
  double reward = 0.0;
  std::size_t cumulative_tasks = 0;  // tasks completed so far in this episode
  std::uint64_t bits_spent = 0;
  std::uint64_t budget_bits = 0;
  Allocation k;
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void append_csv(std::string& out, const MetricsRow& r) {
  out += r.run_id;
  out += ',' + std::to_string(r.seed) + ',' + std::to_string(r.episode) + ',' + std::to_string(r.round) + ',';
  out += r.policy;
  out += ',' + format_real(r.reward) + ',' + std::to_string(r.cumulative_tasks) + ',' + std::to_string(r.bits_spent) +
         ',' + std::to_string(r.budget_bits) + ',';
  for (std::size_t i = 0; i < r.k.size(); ++i) out += (i ? ";" : "") + std::to_string(r.k[i]);
  out += '\n';
}

/// Rows and per-episode aggregates for one seed and one phase.
struct EpisodeLog {
  std::string csv;
  std::vector<double> returns;
  std::vector<std::vector<std::size_t>> cumulative;  // [episode][round - 1]
};

/// SchedulerEnv seen through the flat interface the trainers use, recording every round.
class LoggedSchedulerEnv {
 public:
  LoggedSchedulerEnv(const EnvConfig& config, EpisodeLog& log, std::string run_id, std::string policy,
                     std::uint64_t seed)
      : env_(config), log_(&log), run_id_(std::move(run_id)), policy_(std::move(policy)), seed_(seed) {}

  std::vector<double> reset(std::uint64_t episode_seed) {
    state_ = env_.reset(episode_seed);
    episode_ = log_->returns.size();
    log_->returns.push_back(0.0);
    log_->cumulative.emplace_back();
    return state_.features;
  }

  rl::Transition step(std::size_t action) {
    const StepOutcome out = record(env_.step(action), env_.actions().at(action));
    return {out.next_state.features, out.reward, out.done, false};
  }

  StepOutcome step(const Allocation& allocation) { return record(env_.step(allocation), allocation); }

  const EnvState& state() const { return state_; }
  std::size_t action_count() const { return env_.action_count(); }
  std::size_t state_dim() const { return env_.state_dim(); }
  const SchedulerEnv& env() const { return env_; }

 private:
  StepOutcome record(StepOutcome out, const Allocation& allocation) {
    state_ = out.next_state;
    MetricsRow row{run_id_,
                   seed_,
                   episode_,
                   env_.round_index(),
                   policy_,
                   out.reward,
                   env_.completed_tasks(),
                   out.info.bits_spent,
                   out.info.budget_bits,
                   allocation};
    append_csv(log_->csv, row);
    log_->returns.back() += out.reward;
    log_->cumulative.back().push_back(row.cumulative_tasks);
    return out;
  }

  SchedulerEnv env_;
  EpisodeLog* log_;
  std::string run_id_;
  std::string policy_;
  std::uint64_t seed_;
  std::size_t episode_ = 0;
  EnvState state_;
};

/// Acts greedily with respect to a network's outputs (Q-values or policy logits).
class GreedyNetworkPolicy final : public SchedulingPolicy {
 public:
  GreedyNetworkPolicy(std::string name, rl::Mlp net, std::vector<Allocation> actions)
      : name_(std::move(name)), net_(std::move(net)), actions_(std::move(actions)) {}
  std::string name() const override { return name_; }
  Allocation act(const EnvState& s) override { return actions_[rl::argmax(net_.forward(s.features, ws_))]; }
  const rl::Mlp& network() const { return net_; }

 private:
  std::string name_;
  rl::Mlp net_;
  std::vector<Allocation> actions_;
  rl::Mlp::Workspace ws_;
};

namespace detail {

inline constexpr std::uint64_t kEvalStream = 0xE7A1'0000'0000'0000ULL;
inline constexpr std::uint64_t kPolicyTrainStream = 0x7A4D;
inline constexpr std::uint64_t kPolicyEvalStream = 0x7A4E;

inline std::unique_ptr<SchedulingPolicy> make_baseline(const ExperimentConfig& c, std::uint64_t rng_seed) {
  const auto n = c.env.agents;
  if (c.policy == "heuristic") return std::make_unique<HeuristicUncertaintyPolicy>(n, c.env.k_max);
  if (c.policy == "random_k") return std::make_unique<RandomKPolicy>(n, c.env.k_max, rng_seed);
  if (c.policy == "fixed_k") return std::make_unique<FixedKPolicy>(n, c.fixed_k);
  if (c.policy == "no_retrieval") return std::make_unique<NoRetrievalPolicy>(n);
  throw ConfigurationError("policy: '" + c.policy + "' is not a baseline");
}

inline void run_policy_episodes(LoggedSchedulerEnv& env, SchedulingPolicy& policy, std::size_t episodes,
                                std::uint64_t seed_base) {
  for (std::size_t e = 0; e < episodes; ++e) {
    env.reset(rl::episode_seed(seed_base, e));
    bool done = false;
    while (!done) done = env.step(policy.act(env.state())).done;
  }
}

}  // namespace detail

struct SeedSummary {
  std::uint64_t seed = 0;
  double final_window_reward = std::numeric_limits<double>::quiet_NaN();
  double eval_mean_return = 0.0;
  std::size_t tasks_completed = 0;
  std::size_t tasks_total = 0;
  std::size_t rounds_to_complete = 0;         // max_rounds + 1 when some task never completes
  std::vector<std::size_t> completion_curve;  // cumulative completions over all eval episodes, by round
};

struct SeedOutcome {
  SeedSummary summary;
  EpisodeLog train;
  EpisodeLog eval;
  std::optional<rl::Mlp> network;
  double seconds = 0.0;
};

/// Mean of the last `window` values (all of them if fewer).
inline double final_window_mean(const std::vector<double>& v, std::size_t window) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t w = std::min(window, v.size());
  double s = 0.0;
  for (std::size_t i = v.size() - w; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(w);
}

/// Cumulative completions over all episodes by round 1..max_rounds; finished episodes carry their final count.
inline std::vector<std::size_t> completion_curve(const EpisodeLog& log, std::size_t max_rounds) {
  std::vector<std::size_t> curve(max_rounds, 0);
  for (const auto& ep : log.cumulative)
    for (std::size_t r = 0; r < max_rounds; ++r)
      curve[r] += ep.empty() ? 0 : ep[std::min(r, ep.size() - 1)];
  return curve;
}

inline std::string checkpoint_name(std::uint64_t seed) { return "checkpoint_s" + std::to_string(seed) + ".rlck"; }

/// Trains (learned policies) or rolls out (baselines) for one seed, then evaluates greedily.
/// With `checkpoint_dir` set, a learned policy skips training and loads its network instead.
inline SeedOutcome run_seed(const ExperimentConfig& c, std::uint64_t seed,
                            const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt) {
  const auto t0 = std::chrono::steady_clock::now();
  SeedOutcome out;
  out.summary.seed = seed;
  const std::string run_id = c.policy + "-s" + std::to_string(seed);
  std::unique_ptr<SchedulingPolicy> eval_policy;

  if (is_learned(c.policy)) {
    rl::Mlp net;
    if (checkpoint_dir) {
      net = rl::load_checkpoint((*checkpoint_dir / checkpoint_name(seed)).string());
    } else {
      auto factory = [&] { return LoggedSchedulerEnv(c.env, out.train, run_id, c.policy, seed); };
      if (c.policy == "dqn") {
        net = rl::dqn_train(factory, c.dqn, seed).q_network;
      } else {
        net = rl::ppo_train(factory, c.ppo, seed).policy;
      }
    }
    SchedulerEnv probe(c.env);
    const auto& sizes = net.sizes();
    if (sizes.front() != probe.state_dim() || sizes.back() != probe.action_count())
      throw ConfigurationError("checkpoint for seed " + std::to_string(seed) + " has shape " +
                               std::to_string(sizes.front()) + "->" + std::to_string(sizes.back()) +
                               ", environment needs " + std::to_string(probe.state_dim()) + "->" +
                               std::to_string(probe.action_count()));
    out.network = net;
    eval_policy = std::make_unique<GreedyNetworkPolicy>(c.policy, std::move(net), probe.actions());
  } else {
    LoggedSchedulerEnv env(c.env, out.train, run_id, c.policy, seed);
    auto policy = detail::make_baseline(c, derive_seed(seed, detail::kPolicyTrainStream));
    detail::run_policy_episodes(env, *policy, c.episodes, seed);
    eval_policy = detail::make_baseline(c, derive_seed(seed, detail::kPolicyEvalStream));
  }

  LoggedSchedulerEnv eval_env(c.env, out.eval, run_id, c.policy, seed);
  detail::run_policy_episodes(eval_env, *eval_policy, c.eval_episodes, derive_seed(seed, detail::kEvalStream));

  auto& s = out.summary;
  if (!out.train.returns.empty()) s.final_window_reward = final_window_mean(out.train.returns, c.window);
  s.eval_mean_return = final_window_mean(out.eval.returns, out.eval.returns.size());
  s.tasks_total = c.eval_episodes * c.env.agents;
  s.completion_curve = completion_curve(out.eval, c.env.max_rounds);
  s.tasks_completed = s.completion_curve.back();
  s.rounds_to_complete = c.env.max_rounds + 1;
  for (std::size_t r = 0; r < s.completion_curve.size(); ++r) {
    if (s.completion_curve[r] == s.tasks_total) {
      s.rounds_to_complete = r + 1;
      break;
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  double se = 0.0;
  std::size_t n = 0;
};

inline Stats describe(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(v.size()));
  }
  return s;
}

inline constexpr std::string_view kSummaryHeader =
    "seed,final_window_reward,eval_mean_return,tasks_completed,tasks_total,rounds_to_complete";

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> checkpoint_dir;  // evaluation-only when set
  unsigned jobs = 1;
  std::ostream* log = nullptr;
};

struct RunResult {
  std::vector<SeedSummary> seeds;
  std::uint64_t invariant_violations = 0;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::string summary_csv(const std::vector<SeedSummary>& seeds) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const auto& s : seeds) {
    out += std::to_string(s.seed) + ',' + format_real(s.final_window_reward) + ',' + format_real(s.eval_mean_return) +
           ',' + std::to_string(s.tasks_completed) + ',' + std::to_string(s.tasks_total) + ',' +
           std::to_string(s.rounds_to_complete) + '\n';
  }
  return out;
}

inline std::string summary_text(const ExperimentConfig& c, const RunResult& r) {
  std::vector<double> fw, ret, rounds, frac;
  for (const auto& s : r.seeds) {
    if (!std::isnan(s.final_window_reward)) fw.push_back(s.final_window_reward);
    ret.push_back(s.eval_mean_return);
    rounds.push_back(static_cast<double>(s.rounds_to_complete));
    frac.push_back(static_cast<double>(s.tasks_completed) / static_cast<double>(s.tasks_total));
  }
  auto line = [](const std::string& name, const Stats& st) {
    return name + " = " + format_real(st.mean) + " sd " + format_real(st.sd) + " se " + format_real(st.se) + "\n";
  };
  std::string out = "policy = " + c.policy + "\nseeds = " + std::to_string(r.seeds.size()) + "\n";
  if (!fw.empty()) out += line("final_window_reward", describe(fw));
  out += line("eval_mean_return", describe(ret));
  out += line("rounds_to_complete", describe(rounds));
  out += line("completion_fraction", describe(frac));
  out += "invariant_violations = " + std::to_string(r.invariant_violations) + "\n";
  return out;
}

/// Runs every configured seed (in parallel when jobs > 1) and writes the run directory.
inline RunResult run_experiment(const ExperimentConfig& c, const RunOptions& opt) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + opt.out_dir.string() + ": " + ec.message());
  if (opt.checkpoint_dir && !is_learned(c.policy))
    throw ConfigurationError("policy: evaluation from checkpoints needs a learned policy (ppo or dqn)");

  const std::uint64_t violations_before = InvariantMonitor::global().violations();
  std::vector<SeedOutcome> outcomes(c.seeds.size());
  std::vector<std::exception_ptr> errors(c.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < c.seeds.size(); i = next++) {
      try {
        outcomes[i] = run_seed(c, c.seeds[i], opt.checkpoint_dir);
        if (opt.log) {
          std::lock_guard lock(log_mutex);
          *opt.log << c.policy << " seed " << c.seeds[i] << ": final-window "
                   << format_real(outcomes[i].summary.final_window_reward) << ", eval tasks "
                   << outcomes[i].summary.tasks_completed << "/" << outcomes[i].summary.tasks_total << " ("
                   << outcomes[i].seconds << " s)\n";
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(c.seeds.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunResult result;
  std::string train(kMetricsHeader), eval(kMetricsHeader);
  train += '\n';
  eval += '\n';
  for (auto& o : outcomes) {
    train += o.train.csv;
    eval += o.eval.csv;
    result.seeds.push_back(o.summary);
    if (o.network && !opt.checkpoint_dir) rl::save_checkpoint(*o.network, (opt.out_dir / checkpoint_name(o.summary.seed)).string());
  }
  result.invariant_violations = InvariantMonitor::global().violations() - violations_before;

  detail::write_file(opt.out_dir / "config.txt", echo_config(c));
  detail::write_file(opt.out_dir / "train.csv", train);
  detail::write_file(opt.out_dir / "eval.csv", eval);
  detail::write_file(opt.out_dir / "summary.csv", summary_csv(result.seeds));
  detail::write_file(opt.out_dir / "summary.txt", summary_text(c, result));
  return result;
}

}  // namespace ramsemcom::harness
