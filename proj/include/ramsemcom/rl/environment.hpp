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

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"

namespace ramsemcom::rl {

struct Transition {
  std::vector<double> next_state;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;  // episode cut by a time limit; bootstrap through it
};

/// Seed of training episode `episode` in a run seeded with `run_seed`.
constexpr std::uint64_t episode_seed(std::uint64_t run_seed, std::size_t episode) noexcept {
  return derive_seed(run_seed, episode);
}

/// What the trainers need from an environment: flat observations, a finite action set.
template <typename E>
concept DiscreteEnvironment = requires(E& env, std::uint64_t seed, std::size_t action) {
  { env.reset(seed) } -> std::same_as<std::vector<double>>;
  { env.step(action) } -> std::same_as<Transition>;
  { env.action_count() } -> std::convertible_to<std::size_t>;
  { env.state_dim() } -> std::convertible_to<std::size_t>;
};

/// Two-state deterministic chain used as a Q-learning oracle.
///
///   s0 --stay--> s0 (r = 0)      s0 --advance--> s1 (r = 0)
///   s1 --stay--> s0 (r = 0.1)    s1 --advance--> terminal (r = 1)
///
/// Observations are one-hot. With discount 0.9 the optimal values are
///   Q*(s0) = [0.81, 0.90],  Q*(s1) = [0.91, 1.00],
/// so "advance" is optimal in both states. Episodes are truncated after
/// `time_limit` steps.
class ChainMdp {
 public:
  static constexpr std::size_t kStay = 0;
  static constexpr std::size_t kAdvance = 1;

  explicit ChainMdp(std::size_t time_limit = 50) : time_limit_(time_limit) {}

  std::vector<double> reset(std::uint64_t) {
    state_ = 0;
    steps_ = 0;
    return observe();
  }

  Transition step(std::size_t action) {
    if (action > 1) throw ContractViolation("ChainMdp: action must be 0 or 1");
    Transition t;
    ++steps_;
    if (state_ == 0) {
      state_ = action == kAdvance ? 1 : 0;
    } else if (action == kAdvance) {
      t.reward = 1.0;
      t.done = true;
      state_ = 0;
    } else {
      t.reward = 0.1;
      state_ = 0;
    }
    if (!t.done && steps_ >= time_limit_) {
      t.done = true;
      t.truncated = true;
    }
    t.next_state = observe();
    return t;
  }

  std::size_t action_count() const { return 2; }
  std::size_t state_dim() const { return 2; }

  static std::vector<double> one_hot(std::size_t s) { return s == 0 ? std::vector{1.0, 0.0} : std::vector{0.0, 1.0}; }

  /// Q* by value iteration: q[state][action].
  static std::array<std::array<double, 2>, 2> optimal_q(double gamma, int iterations = 2000) {
    std::array<std::array<double, 2>, 2> q{};
    for (int it = 0; it < iterations; ++it) {
      const double v0 = std::max(q[0][0], q[0][1]);
      const double v1 = std::max(q[1][0], q[1][1]);
      std::array<std::array<double, 2>, 2> n{};
      n[0][kStay] = 0.0 + gamma * v0;
      n[0][kAdvance] = 0.0 + gamma * v1;
      n[1][kStay] = 0.1 + gamma * v0;
      n[1][kAdvance] = 1.0;
      q = n;
    }
    return q;
  }

 private:
  std::vector<double> observe() const { return one_hot(state_); }

  std::size_t time_limit_;
  std::size_t state_ = 0;
  std::size_t steps_ = 0;
};

/// One-step two-armed bandit: arm 1 pays `good`, arm 0 pays `bad`.
class TwoArmedBandit {
 public:
  explicit TwoArmedBandit(double bad = 0.0, double good = 1.0) : bad_(bad), good_(good) {}

  std::vector<double> reset(std::uint64_t) { return {1.0}; }

  Transition step(std::size_t action) {
    if (action > 1) throw ContractViolation("TwoArmedBandit: action must be 0 or 1");
    Transition t;
    t.reward = action == 1 ? good_ : bad_;
    t.done = true;
    t.next_state = {1.0};
    return t;
  }

  std::size_t action_count() const { return 2; }
  std::size_t state_dim() const { return 1; }

 private:
  double bad_;
  double good_;
};

}  // namespace ramsemcom::rl
