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

// Experiment configuration files.
//
// Format: one `key = value` per line, `#` starts a comment, and `[section]`
// headers prefix the keys that follow with `section.`. These two files are
// equivalent:
//
//   [channel.fading]            channel.fading.enabled = true
//   enabled = true
//
// Absent keys take documented defaults; echo_config() prints every key in
// flat form, and that output re-parses to the same configuration.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/rl/dqn.hpp"
#include "ramsemcom/rl/ppo.hpp"
#include "ramsemcom/scheduler_env.hpp"

namespace ramsemcom::harness {

inline const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names{"ppo", "dqn", "heuristic", "random_k", "fixed_k", "no_retrieval"};
  return names;
}

inline bool is_learned(std::string_view policy) { return policy == "ppo" || policy == "dqn"; }

struct ExperimentConfig {
  std::string policy = "ppo";
  std::uint32_t fixed_k = 1;
  std::vector<std::uint64_t> seeds = [] {
    std::vector<std::uint64_t> s(20);
    for (std::uint64_t i = 0; i < 20; ++i) s[i] = i;
    return s;
  }();
  std::size_t episodes = 3000;
  std::string output = "runs";
  std::size_t eval_episodes = 10;
  std::size_t window = 10;
  EnvConfig env;
  rl::DqnConfig dqn;
  rl::PpoConfig ppo;
};

struct ConfigResult {
  ExperimentConfig config;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::vector<std::uint64_t>> parse_seeds(std::string_view s) {
  std::vector<std::uint64_t> out;
  if (auto dots = s.find(".."); dots != std::string_view::npos) {
    auto a = parse_number<std::uint64_t>(trim(s.substr(0, dots)));
    auto b = parse_number<std::uint64_t>(trim(s.substr(dots + 2)));
    if (!a || !b || *b < *a || *b - *a > 1'000'000) return std::nullopt;
    for (std::uint64_t i = *a; i <= *b; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss{std::string(s)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_number<std::uint64_t>(trim(item));
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

inline std::string format_seeds(const std::vector<std::uint64_t>& seeds) {
  bool contiguous = seeds.size() > 1;
  for (std::size_t i = 1; i < seeds.size(); ++i) contiguous = contiguous && seeds[i] == seeds[i - 1] + 1;
  if (contiguous) return std::to_string(seeds.front()) + ".." + std::to_string(seeds.back());
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

template <typename T>
std::optional<std::vector<T>> parse_list(std::string_view s) {
  std::vector<T> out;
  std::stringstream ss{std::string(s)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_number<T>(trim(item));
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

template <typename T>
std::string format_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct KeySpec {
  std::string name;
  std::function<std::optional<std::string>(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Integers are parsed signed so that "-1" reaches the range check with a useful message.
template <typename Ref>
KeySpec count_key(std::string name, Ref ref, long long min_value) {
  return {name,
          [ref, min_value, name](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
            auto n = parse_number<long long>(v);
            if (!n) return "expected an integer, got '" + std::string(v) + "'";
            if (*n < min_value) return "must be >= " + std::to_string(min_value) + " (got " + std::to_string(*n) + ")";
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(*n);
            return std::nullopt;
          },
          [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Ref>
KeySpec real_key(std::string name, Ref ref) {
  return {name,
          [ref](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
            auto x = parse_number<double>(v);
            if (!x || !std::isfinite(*x)) return "expected a finite number, got '" + std::string(v) + "'";
            ref(c) = *x;
            return std::nullopt;
          },
          [ref](const ExperimentConfig& c) { return format_double(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Ref>
KeySpec bool_key(std::string name, Ref ref) {
  return {name,
          [ref](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
            if (v == "true") ref(c) = true;
            else if (v == "false") ref(c) = false;
            else return "expected true or false, got '" + std::string(v) + "'";
            return std::nullopt;
          },
          [ref](const ExperimentConfig& c) { return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); }};
}

template <typename T, typename Ref>
KeySpec list_key(std::string name, Ref ref) {
  return {name,
          [ref](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
            auto l = parse_list<T>(v);
            if (!l || l->empty()) return "expected a comma-separated list of non-negative integers";
            ref(c) = *l;
            return std::nullopt;
          },
          [ref](const ExperimentConfig& c) { return format_list(ref(const_cast<ExperimentConfig&>(c))); }};
}

#define RAMSEMCOM_REF(expr) [](ExperimentConfig& c) -> auto& { return expr; }

inline const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> k;
    k.push_back({"policy",
                 [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                   c.policy = std::string(v);
                   return std::nullopt;
                 },
                 [](const ExperimentConfig& c) { return c.policy; }});
    k.push_back(count_key("fixed_k", RAMSEMCOM_REF(c.fixed_k), 0));
    k.push_back({"seeds",
                 [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                   auto s = parse_seeds(v);
                   if (!s) return "expected 'a..b' or a comma-separated list of seeds, got '" + std::string(v) + "'";
                   c.seeds = *s;
                   return std::nullopt;
                 },
                 [](const ExperimentConfig& c) { return format_seeds(c.seeds); }});
    k.push_back(count_key("episodes", RAMSEMCOM_REF(c.episodes), 1));
    k.push_back({"output",
                 [](ExperimentConfig& c, std::string_view v) -> std::optional<std::string> {
                   c.output = std::string(v);
                   return std::nullopt;
                 },
                 [](const ExperimentConfig& c) { return c.output; }});
    k.push_back(count_key("agents", RAMSEMCOM_REF(c.env.agents), 1));
    k.push_back(count_key("k_max", RAMSEMCOM_REF(c.env.k_max), 0));
    k.push_back(count_key("max_rounds", RAMSEMCOM_REF(c.env.max_rounds), 1));
    k.push_back(count_key("top_m", RAMSEMCOM_REF(c.env.top_m), 1));
    k.push_back(count_key("action_cap", RAMSEMCOM_REF(c.env.action_cap), 1));
    k.push_back(real_key("reward.w1", RAMSEMCOM_REF(c.env.reward.w1)));
    k.push_back(real_key("reward.w2", RAMSEMCOM_REF(c.env.reward.w2)));
    k.push_back(real_key("reward.w3", RAMSEMCOM_REF(c.env.reward.w3)));
    k.push_back(count_key("scene.dimension", RAMSEMCOM_REF(c.env.scene.dimension), 2));
    k.push_back(count_key("scene.patches", RAMSEMCOM_REF(c.env.scene.patches), 1));
    k.push_back(count_key("scene.critical", RAMSEMCOM_REF(c.env.scene.critical), 1));
    k.push_back(real_key("scene.theta", RAMSEMCOM_REF(c.env.scene.theta)));
    k.push_back(real_key("scene.sigma", RAMSEMCOM_REF(c.env.scene.sigma)));
    k.push_back(count_key("scene.summary_bits", RAMSEMCOM_REF(c.env.scene.summary_bits), 1));
    k.push_back(list_key<std::uint64_t>("scene.size_bits", RAMSEMCOM_REF(c.env.scene.size_bits_choices)));
    k.push_back(real_key("channel.bandwidth_hz", RAMSEMCOM_REF(c.env.channel.bandwidth_hz)));
    k.push_back(real_key("channel.snr_db", RAMSEMCOM_REF(c.env.channel.snr_db)));
    k.push_back(real_key("channel.round_duration_s", RAMSEMCOM_REF(c.env.channel.round_duration_s)));
    k.push_back(bool_key("channel.fading.enabled", RAMSEMCOM_REF(c.env.channel.fading.enabled)));
    k.push_back(real_key("channel.fading.range_db", RAMSEMCOM_REF(c.env.channel.fading.range_db)));
    k.push_back(count_key("channel.fading.seed", RAMSEMCOM_REF(c.env.channel.fading.seed), 0));
    k.push_back(count_key("eval.episodes", RAMSEMCOM_REF(c.eval_episodes), 1));
    k.push_back(count_key("eval.window", RAMSEMCOM_REF(c.window), 1));
    k.push_back(real_key("dqn.lr", RAMSEMCOM_REF(c.dqn.lr)));
    k.push_back(real_key("dqn.gamma", RAMSEMCOM_REF(c.dqn.gamma)));
    k.push_back(count_key("dqn.buffer", RAMSEMCOM_REF(c.dqn.buffer_capacity), 1));
    k.push_back(count_key("dqn.batch", RAMSEMCOM_REF(c.dqn.batch_size), 1));
    k.push_back(real_key("dqn.eps_start", RAMSEMCOM_REF(c.dqn.eps_start)));
    k.push_back(real_key("dqn.eps_end", RAMSEMCOM_REF(c.dqn.eps_end)));
    k.push_back(count_key("dqn.eps_decay_steps", RAMSEMCOM_REF(c.dqn.eps_decay_steps), 0));
    k.push_back(count_key("dqn.target_sync", RAMSEMCOM_REF(c.dqn.target_sync), 1));
    k.push_back(count_key("dqn.learning_starts", RAMSEMCOM_REF(c.dqn.learning_starts), 0));
    k.push_back(count_key("dqn.train_every", RAMSEMCOM_REF(c.dqn.train_every), 1));
    k.push_back(real_key("dqn.max_grad_norm", RAMSEMCOM_REF(c.dqn.max_grad_norm)));
    k.push_back(list_key<std::size_t>("dqn.hidden", RAMSEMCOM_REF(c.dqn.hidden)));
    k.push_back(real_key("ppo.lr", RAMSEMCOM_REF(c.ppo.lr)));
    k.push_back(real_key("ppo.gamma", RAMSEMCOM_REF(c.ppo.gamma)));
    k.push_back(real_key("ppo.clip", RAMSEMCOM_REF(c.ppo.clip)));
    k.push_back(count_key("ppo.epochs", RAMSEMCOM_REF(c.ppo.epochs), 1));
    k.push_back(count_key("ppo.minibatch", RAMSEMCOM_REF(c.ppo.minibatch), 1));
    k.push_back(real_key("ppo.entropy", RAMSEMCOM_REF(c.ppo.entropy_coef)));
    k.push_back(real_key("ppo.value_coef", RAMSEMCOM_REF(c.ppo.value_coef)));
    k.push_back(real_key("ppo.lambda", RAMSEMCOM_REF(c.ppo.gae_lambda)));
    k.push_back(count_key("ppo.rollout", RAMSEMCOM_REF(c.ppo.rollout), 1));
    k.push_back(real_key("ppo.max_grad_norm", RAMSEMCOM_REF(c.ppo.max_grad_norm)));
    k.push_back(list_key<std::size_t>("ppo.hidden", RAMSEMCOM_REF(c.ppo.hidden)));
    return k;
  }();
  return specs;
}

#undef RAMSEMCOM_REF

/// Cross-key constraints; every violation is reported with its key path.
inline void check_semantics(const ExperimentConfig& c, std::vector<std::string>& errors) {
  auto err = [&](const std::string& key, const std::string& msg) { errors.push_back(key + ": " + msg); };
  const auto& names = policy_names();
  if (std::find(names.begin(), names.end(), c.policy) == names.end())
    err("policy", "unknown policy '" + c.policy + "' (expected ppo, dqn, heuristic, random_k, fixed_k or no_retrieval)");
  if (c.seeds.empty()) err("seeds", "at least one seed is required");
  if (c.fixed_k > c.env.k_max) err("fixed_k", "must be <= k_max (" + std::to_string(c.env.k_max) + ")");
  if (c.output.empty()) err("output", "must not be empty");
  const double actions = std::pow(static_cast<double>(c.env.k_max + 1), static_cast<double>(c.env.agents));
  if (actions > static_cast<double>(c.env.action_cap))
    err("k_max", "joint action count (k_max+1)^agents = " + std::to_string(static_cast<long long>(actions)) +
                     " exceeds action_cap = " + std::to_string(c.env.action_cap) + "; lower k_max or agents");
  for (auto [key, w] : {std::pair{"reward.w1", c.env.reward.w1}, {"reward.w2", c.env.reward.w2}, {"reward.w3", c.env.reward.w3}})
    if (w < 0.0) err(key, "must be >= 0");
  const auto& s = c.env.scene;
  if (s.critical > s.patches) err("scene.critical", "must be <= scene.patches (" + std::to_string(s.patches) + ")");
  if (!(s.theta > 0.0 && s.theta <= 1.0)) err("scene.theta", "must be in (0, 1]");
  if (!(s.sigma >= 0.0)) err("scene.sigma", "must be >= 0");
  for (auto b : s.size_bits_choices)
    if (b == 0) err("scene.size_bits", "entries must be > 0");
  const auto& ch = c.env.channel;
  if (!(ch.bandwidth_hz > 0.0)) err("channel.bandwidth_hz", "must be > 0");
  if (!(ch.round_duration_s > 0.0)) err("channel.round_duration_s", "must be > 0");
  if (!(ch.fading.range_db >= 0.0)) err("channel.fading.range_db", "must be >= 0");
  const auto& d = c.dqn;
  if (!(d.lr > 0.0)) err("dqn.lr", "must be > 0");
  if (!(d.gamma > 0.0 && d.gamma <= 1.0)) err("dqn.gamma", "must be in (0, 1]");
  if (d.batch_size > d.buffer_capacity) err("dqn.batch", "must be <= dqn.buffer");
  if (!(d.eps_start >= 0.0 && d.eps_start <= 1.0)) err("dqn.eps_start", "must be in [0, 1]");
  if (!(d.eps_end >= 0.0 && d.eps_end <= 1.0)) err("dqn.eps_end", "must be in [0, 1]");
  if (!(d.max_grad_norm > 0.0)) err("dqn.max_grad_norm", "must be > 0");
  for (auto h : d.hidden)
    if (h == 0) err("dqn.hidden", "layer sizes must be > 0");
  const auto& p = c.ppo;
  if (!(p.lr > 0.0)) err("ppo.lr", "must be > 0");
  if (!(p.gamma > 0.0 && p.gamma <= 1.0)) err("ppo.gamma", "must be in (0, 1]");
  if (!(p.clip > 0.0 && p.clip < 1.0)) err("ppo.clip", "must be in (0, 1)");
  if (!(p.entropy_coef >= 0.0)) err("ppo.entropy", "must be >= 0");
  if (!(p.value_coef > 0.0)) err("ppo.value_coef", "must be > 0");
  if (!(p.gae_lambda >= 0.0 && p.gae_lambda <= 1.0)) err("ppo.lambda", "must be in [0, 1]");
  if (!(p.max_grad_norm > 0.0)) err("ppo.max_grad_norm", "must be > 0");
  for (auto h : p.hidden)
    if (h == 0) err("ppo.hidden", "layer sizes must be > 0");
}

}  // namespace detail

/// Parses config text. Syntax errors carry "line L, column C"; semantic errors carry the key path.
/// All problems are collected; the returned config holds defaults for anything absent or invalid.
/// `overrides` (e.g. from the command line) are applied after the file and win over it.
inline ConfigResult parse_config(std::string_view text,
                                 const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  ConfigResult result;
  auto& c = result.config;
  std::map<std::string, std::size_t> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    auto at = [&](std::size_t col, const std::string& msg) {
      result.errors.push_back("line " + std::to_string(line_no) + ", column " + std::to_string(col) + ": " + msg);
    };
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string_view::npos) {
        at(first + 1, "unterminated section header");
      } else {
        section = detail::trim(line.substr(first + 1, close - first - 1));
        if (section.empty()) at(first + 1, "empty section name");
        if (!detail::trim(line.substr(close + 1)).empty()) at(close + 2, "unexpected text after section header");
      }
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        at(first + 1, "expected 'key = value'");
      } else {
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        const bool bad_key = key.empty() || !std::all_of(key.begin(), key.end(), [](char ch) {
          return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.';
        });
        if (bad_key) {
          at(first + 1, "invalid key '" + key + "'");
        } else if (value.empty()) {
          at(eq + 2, "missing value for '" + key + "'");
        } else {
          if (!section.empty()) key = section + "." + key;
          if (auto prev = seen.find(key); prev != seen.end()) {
            at(first + 1, "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
          } else {
            seen.emplace(key, line_no);
            const auto& specs = detail::key_specs();
            auto spec = std::find_if(specs.begin(), specs.end(), [&](const auto& s) { return s.name == key; });
            if (spec == specs.end()) {
              result.errors.push_back(key + ": unknown key");
            } else if (auto e = spec->set(c, value)) {
              result.errors.push_back(key + ": " + *e);
            }
          }
        }
      }
    }
    if (end == text.size()) break;
  }
  for (const auto& [key, value] : overrides) {
    const auto& specs = detail::key_specs();
    auto spec = std::find_if(specs.begin(), specs.end(), [&](const auto& s) { return s.name == key; });
    if (spec == specs.end()) {
      result.errors.push_back(key + ": unknown key");
    } else if (auto e = spec->set(c, detail::trim(value))) {
      result.errors.push_back(key + ": " + *e);
    }
  }
  c.dqn.episodes = c.episodes;
  c.ppo.episodes = c.episodes;
  // fixed_k with k = 0 is the no-retrieval policy under another name.
  if (c.policy == "fixed_k" && c.fixed_k == 0) c.policy = "no_retrieval";
  detail::check_semantics(c, result.errors);
  return result;
}

inline ConfigResult load_config(const std::string& path,
                                const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

/// Every key, flat `key = value`, in documentation order.
inline std::string echo_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& spec : detail::key_specs()) out += spec.name + " = " + spec.get(c) + "\n";
  return out;
}

/// Keys that define the environment and evaluation protocol; runs are only comparable if these match.
inline bool is_environment_key(std::string_view key) {
  static const std::set<std::string, std::less<>> top{"agents", "k_max", "max_rounds", "top_m", "action_cap",
                                                      "episodes", "eval.episodes", "eval.window"};
  return top.contains(key) || key.starts_with("reward.") || key.starts_with("scene.") || key.starts_with("channel.");
}

}  // namespace ramsemcom::harness
