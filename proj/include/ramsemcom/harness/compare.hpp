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

// Side-by-side comparison of run directories written by run_experiment().
//
// Runs must agree on every environment key; only seeds present in all runs
// are used. Outputs: a text table, reward_curves.csv (per-episode mean return
// across seeds, raw and trailing-window smoothed) and completion_curves.csv
// (mean cumulative evaluation completions by round).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/harness/config.hpp"
#include "ramsemcom/harness/experiment.hpp"

namespace ramsemcom::harness {

struct LoadedRun {
  std::filesystem::path dir;
  std::string label;
  ExperimentConfig config;
  std::map<std::string, std::string> keys;
  std::map<std::uint64_t, SeedSummary> summaries;
  std::map<std::uint64_t, std::vector<double>> returns;  // training episode returns
};

struct PolicyStats {
  std::string label;
  std::string policy;
  Stats final_window;
  Stats eval_return;
  Stats rounds;
  double completion_fraction = 0.0;
  std::vector<double> mean_returns;     // by training episode
  std::vector<double> mean_completion;  // by round
};

struct CheckLine {
  bool pass = false;
  std::string text;
};

struct Comparison {
  std::vector<std::uint64_t> seeds;
  std::vector<PolicyStats> policies;
  std::vector<CheckLine> ordering;
  std::vector<CheckLine> completion;
  std::size_t window = 10;

  bool all_pass() const {
    auto ok = [](const auto& v) { return std::all_of(v.begin(), v.end(), [](const auto& c) { return c.pass; }); };
    return ok(ordering) && ok(completion);
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw IoError("cannot read " + p.string());
  return f;
}

inline void expect_header(std::ifstream& f, std::string_view header, const std::filesystem::path& p) {
  std::string line;
  if (!std::getline(f, line) || line != header) throw FormatError(p.string() + ": unexpected header");
}

}  // namespace detail

inline LoadedRun load_run(const std::filesystem::path& dir) {
  LoadedRun run;
  run.dir = dir;
  {
    auto f = detail::open_or_throw(dir / "config.txt");
    std::stringstream ss;
    ss << f.rdbuf();
    auto parsed = parse_config(ss.str());
    if (!parsed.ok()) throw FormatError((dir / "config.txt").string() + ": " + parsed.errors.front());
    run.config = parsed.config;
    std::string line;
    std::istringstream in(echo_config(run.config));
    while (std::getline(in, line)) {
      const auto eq = line.find(" = ");
      run.keys[line.substr(0, eq)] = line.substr(eq + 3);
    }
  }
  {
    const auto p = dir / "summary.csv";
    auto f = detail::open_or_throw(p);
    detail::expect_header(f, kSummaryHeader, p);
    std::string line;
    while (std::getline(f, line)) {
      const auto c = detail::split(line, ',');
      if (c.size() != 6) throw FormatError(p.string() + ": malformed row '" + line + "'");
      SeedSummary s;
      s.seed = std::stoull(c[0]);
      s.final_window_reward = std::stod(c[1]);
      s.eval_mean_return = std::stod(c[2]);
      s.tasks_completed = std::stoull(c[3]);
      s.tasks_total = std::stoull(c[4]);
      s.rounds_to_complete = std::stoull(c[5]);
      run.summaries[s.seed] = s;
    }
  }
  {
    const auto p = dir / "train.csv";
    auto f = detail::open_or_throw(p);
    detail::expect_header(f, kMetricsHeader, p);
    std::string line;
    while (std::getline(f, line)) {
      const auto c = detail::split(line, ',');
      if (c.size() != 10) throw FormatError(p.string() + ": malformed row '" + line + "'");
      auto& r = run.returns[std::stoull(c[1])];
      const auto ep = std::stoull(c[2]);
      if (r.size() <= ep) r.resize(ep + 1, 0.0);
      r[ep] += std::stod(c[5]);
    }
  }
  {
    const auto p = dir / "eval.csv";
    auto f = detail::open_or_throw(p);
    detail::expect_header(f, kMetricsHeader, p);
    std::map<std::uint64_t, EpisodeLog> logs;
    std::string line;
    while (std::getline(f, line)) {
      const auto c = detail::split(line, ',');
      if (c.size() != 10) throw FormatError(p.string() + ": malformed row '" + line + "'");
      auto& log = logs[std::stoull(c[1])];
      const auto ep = std::stoull(c[2]);
      if (log.cumulative.size() <= ep) log.cumulative.resize(ep + 1);
      log.cumulative[ep].push_back(std::stoull(c[6]));
    }
    for (auto& [seed, log] : logs)
      if (auto it = run.summaries.find(seed); it != run.summaries.end())
        it->second.completion_curve = completion_curve(log, run.config.env.max_rounds);
  }
  return run;
}

inline int policy_rank(std::string_view p) {
  if (p == "ppo" || p == "dqn") return 0;
  if (p == "heuristic") return 1;
  if (p == "random_k") return 2;
  if (p == "no_retrieval") return 3;
  return -1;
}

/// Builds the comparison; throws ConfigurationError naming the first differing environment key.
inline Comparison compare_runs(std::vector<LoadedRun> runs) {
  if (runs.empty()) throw ConfigurationError("compare: no run directories given");
  const auto& ref = runs.front();
  for (std::size_t i = 1; i < runs.size(); ++i) {
    for (const auto& [key, value] : ref.keys) {
      if (!is_environment_key(key)) continue;
      const auto& other = runs[i].keys.at(key);
      if (other != value)
        throw ConfigurationError("runs are not comparable: " + key + " is " + value + " in " + ref.dir.string() +
                                 " but " + other + " in " + runs[i].dir.string());
    }
  }

  Comparison cmp;
  cmp.window = ref.config.window;
  std::set<std::uint64_t> common;
  for (const auto& [seed, s] : ref.summaries) common.insert(seed);
  for (const auto& r : runs)
    for (auto it = common.begin(); it != common.end();)
      it = r.summaries.contains(*it) ? std::next(it) : common.erase(it);
  if (common.empty()) throw ConfigurationError("runs share no seeds");
  cmp.seeds.assign(common.begin(), common.end());

  std::map<std::string, int> label_count;
  for (auto& r : runs) {
    const int n = ++label_count[r.config.policy];
    r.label = n == 1 ? r.config.policy : r.config.policy + "_" + std::to_string(n);
  }

  for (const auto& r : runs) {
    PolicyStats ps;
    ps.label = r.label;
    ps.policy = r.config.policy;
    std::vector<double> fw, ret, rounds;
    double done = 0.0, total = 0.0;
    std::size_t episodes = 0;
    for (auto seed : cmp.seeds) {
      const auto& s = r.summaries.at(seed);
      if (!std::isnan(s.final_window_reward)) fw.push_back(s.final_window_reward);
      ret.push_back(s.eval_mean_return);
      rounds.push_back(static_cast<double>(s.rounds_to_complete));
      done += static_cast<double>(s.tasks_completed);
      total += static_cast<double>(s.tasks_total);
      if (auto it = r.returns.find(seed); it != r.returns.end()) episodes = std::max(episodes, it->second.size());
    }
    ps.final_window = describe(fw);
    ps.eval_return = describe(ret);
    ps.rounds = describe(rounds);
    ps.completion_fraction = total > 0.0 ? done / total : 0.0;
    ps.mean_returns.assign(episodes, 0.0);
    for (auto seed : cmp.seeds)
      if (auto it = r.returns.find(seed); it != r.returns.end())
        for (std::size_t e = 0; e < it->second.size(); ++e)
          ps.mean_returns[e] += it->second[e] / static_cast<double>(cmp.seeds.size());
    ps.mean_completion.assign(r.config.env.max_rounds, 0.0);
    for (auto seed : cmp.seeds) {
      const auto& curve = r.summaries.at(seed).completion_curve;
      for (std::size_t k = 0; k < curve.size() && k < ps.mean_completion.size(); ++k)
        ps.mean_completion[k] += static_cast<double>(curve[k]) / static_cast<double>(cmp.seeds.size());
    }
    cmp.policies.push_back(std::move(ps));
  }

  // Expected ordering of final-window reward: learned > heuristic > random_k > no_retrieval,
  // each gap larger than the pooled standard error of the two means.
  for (const auto& a : cmp.policies) {
    for (const auto& b : cmp.policies) {
      const int ra = policy_rank(a.policy), rb = policy_rank(b.policy);
      if (ra < 0 || rb < 0 || ra >= rb) continue;
      const double gap = a.final_window.mean - b.final_window.mean;
      const double pooled = std::sqrt(a.final_window.se * a.final_window.se + b.final_window.se * b.final_window.se);
      CheckLine c;
      c.pass = gap > pooled;
      c.text = "ordering " + std::string(c.pass ? "PASS" : "FAIL") + ": " + a.label + " - " + b.label + " = " +
               format_real(gap) + " vs pooled SE " + format_real(pooled);
      cmp.ordering.push_back(c);
    }
  }
  for (const auto& a : cmp.policies) {
    if (policy_rank(a.policy) != 0) continue;
    for (const auto& b : cmp.policies) {
      if (b.policy != "heuristic" && b.policy != "random_k") continue;
      CheckLine c;
      c.pass = a.rounds.mean < b.rounds.mean;
      c.text = "completion " + std::string(c.pass ? "PASS" : "FAIL") + ": " + a.label + " needs " +
               format_real(a.rounds.mean) + " rounds vs " + b.label + " " + format_real(b.rounds.mean);
      cmp.completion.push_back(c);
    }
  }
  for (const auto& a : cmp.policies) {
    if (a.policy != "no_retrieval") continue;
    CheckLine c;
    c.pass = a.completion_fraction <= 0.10;
    c.text = "completion " + std::string(c.pass ? "PASS" : "FAIL") + ": " + a.label + " completes " +
             format_real(a.completion_fraction) + " of evaluation tasks (limit 0.1)";
    cmp.completion.push_back(c);
  }
  return cmp;
}

inline std::vector<double> trailing_mean(const std::vector<double>& v, std::size_t window) {
  std::vector<double> out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v[i];
    if (i >= window) s -= v[i - window];
    out[i] = s / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

inline std::string comparison_table(const Comparison& cmp) {
  const PolicyStats* base = &cmp.policies.front();
  for (const auto& p : cmp.policies)
    if (p.policy == "heuristic") base = &p;
  std::ostringstream out;
  char buf[256];
  out << "seeds in common: " << cmp.seeds.size() << "\n";
  std::snprintf(buf, sizeof buf, "%-14s %22s %12s %18s %16s %10s\n", "policy", "final-window (+-SE)",
                ("d vs " + base->label).c_str(), "eval return (+-SE)", "rounds (+-sd)", "completed");
  out << buf;
  for (const auto& p : cmp.policies) {
    std::snprintf(buf, sizeof buf, "%-14s %12.4f +- %6.4f %+12.4f %9.4f +- %5.4f %8.2f +- %4.2f %9.1f%%\n",
                  p.label.c_str(), p.final_window.mean, p.final_window.se, p.final_window.mean - base->final_window.mean,
                  p.eval_return.mean, p.eval_return.se, p.rounds.mean, p.rounds.sd, 100.0 * p.completion_fraction);
    out << buf;
  }
  for (const auto& c : cmp.ordering) out << c.text << "\n";
  for (const auto& c : cmp.completion) out << c.text << "\n";
  if (cmp.ordering.empty() && cmp.completion.empty()) out << "no ranked policy pairs to check\n";
  return out.str();
}

/// Writes comparison.txt and the two plot-ready CSVs into `out_dir`.
inline void write_comparison(const Comparison& cmp, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  detail::write_file(out_dir / "comparison.txt", comparison_table(cmp));

  std::string curves = "episode";
  std::size_t episodes = 0;
  std::vector<std::vector<double>> smooth;
  for (const auto& p : cmp.policies) {
    curves += "," + p.label + "_raw," + p.label + "_w" + std::to_string(cmp.window);
    episodes = std::max(episodes, p.mean_returns.size());
    smooth.push_back(trailing_mean(p.mean_returns, cmp.window));
  }
  curves += '\n';
  for (std::size_t e = 0; e < episodes; ++e) {
    curves += std::to_string(e);
    for (std::size_t i = 0; i < cmp.policies.size(); ++i) {
      const auto& raw = cmp.policies[i].mean_returns;
      curves += e < raw.size() ? "," + format_real(raw[e]) + "," + format_real(smooth[i][e]) : ",,";
    }
    curves += '\n';
  }
  detail::write_file(out_dir / "reward_curves.csv", curves);

  std::string completion = "round";
  std::size_t rounds = 0;
  for (const auto& p : cmp.policies) {
    completion += "," + p.label;
    rounds = std::max(rounds, p.mean_completion.size());
  }
  completion += '\n';
  for (std::size_t r = 0; r < rounds; ++r) {
    completion += std::to_string(r + 1);
    for (const auto& p : cmp.policies)
      completion += r < p.mean_completion.size() ? "," + format_real(p.mean_completion[r]) : ",";
    completion += '\n';
  }
  detail::write_file(out_dir / "completion_curves.csv", completion);
}

}  // namespace ramsemcom::harness
