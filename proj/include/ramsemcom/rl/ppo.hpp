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

// Proximal policy optimisation over a categorical action set.
//
// Separate policy (logits) and value networks. Each rollout of `rollout`
// env steps is turned into GAE(lambda) advantages, normalised, and fitted for
// `epochs` passes of shuffled minibatches minimising
//
//   -min(rho * A, clip(rho, 1 - eps, 1 + eps) * A) - c_ent * H(pi) + c_v * (V - R)^2
//
// where rho = pi(a|s) / pi_old(a|s).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <type_traits>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"
#include "ramsemcom/rl/dqn.hpp"
#include "ramsemcom/rl/environment.hpp"
#include "ramsemcom/rl/mlp.hpp"

namespace ramsemcom::rl {

struct PpoConfig {
  std::vector<std::size_t> hidden{64, 64};
  double lr = 3e-4;
  double gamma = 0.95;
  double clip = 0.2;
  std::size_t epochs = 4;
  std::size_t minibatch = 64;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double gae_lambda = 0.95;
  std::size_t rollout = 512;
  double max_grad_norm = 0.5;
  std::size_t episodes = 200;
  std::size_t max_nonfinite = 10;

  void validate() const {
    if (!(lr > 0.0)) throw ParameterError("ppo.lr must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ParameterError("ppo.gamma must be in (0, 1]");
    if (!(clip > 0.0)) throw ParameterError("ppo.clip must be > 0");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ParameterError("ppo.lambda must be in [0, 1]");
    if (epochs == 0 || minibatch == 0 || rollout == 0) throw ParameterError("ppo epochs, minibatch and rollout must be > 0");
    if (!(entropy_coef >= 0.0) || !(value_coef > 0.0)) throw ParameterError("ppo coefficients out of range");
    if (episodes == 0) throw ParameterError("ppo.episodes must be > 0");
  }
};

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= s;
  return p;
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  const double lse = m + std::log(s);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

/// Mean clipped surrogate over a batch.
inline double clipped_surrogate(std::span<const double> ratios, std::span<const double> advantages, double clip) {
  double s = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double r = ratios[i];
    const double clipped = std::clamp(r, 1.0 - clip, 1.0 + clip);
    s += std::min(r * advantages[i], clipped * advantages[i]);
  }
  return ratios.empty() ? 0.0 : s / static_cast<double>(ratios.size());
}

/// Mean importance-weighted policy-gradient objective (no clipping).
inline double unclipped_surrogate(std::span<const double> ratios, std::span<const double> advantages) {
  double s = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) s += ratios[i] * advantages[i];
  return ratios.empty() ? 0.0 : s / static_cast<double>(ratios.size());
}

/// GAE(lambda). `terminal[t]` stops bootstrapping after step t; `episode_end[t]`
/// stops the advantage recursion (true for terminal and truncated steps).
/// `next_values[t]` is V(s_{t+1}).
inline std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                       std::span<const double> next_values, const std::vector<bool>& terminal,
                                       const std::vector<bool>& episode_end, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double bootstrap = terminal[t] ? 0.0 : gamma * next_values[t];
    const double delta = rewards[t] + bootstrap - values[t];
    running = delta + (episode_end[t] ? 0.0 : gamma * lambda * running);
    adv[t] = running;
  }
  return adv;
}

struct PpoResult {
  Mlp policy;
  Mlp value;
  std::vector<double> episode_returns;
  std::uint64_t env_steps = 0;
  std::size_t updates = 0;
};

namespace detail {

struct RolloutStep {
  std::vector<double> state;
  std::size_t action;
  double log_prob;
  double value;
  double next_value;
  double reward;
  bool terminal;
  bool episode_end;
};

inline void ppo_update(Mlp& policy, Mlp& value, Adam& policy_opt, Adam& value_opt, std::vector<RolloutStep>& batch,
                       const PpoConfig& config, Rng& rng) {
  const std::size_t n = batch.size();
  std::vector<double> rewards(n), values(n), next_values(n);
  std::vector<bool> terminal(n), episode_end(n);
  for (std::size_t i = 0; i < n; ++i) {
    rewards[i] = batch[i].reward;
    values[i] = batch[i].value;
    next_values[i] = batch[i].next_value;
    terminal[i] = batch[i].terminal;
    episode_end[i] = batch[i].episode_end;
  }
  auto adv = compute_gae(rewards, values, next_values, terminal, episode_end, config.gamma, config.gae_lambda);
  std::vector<double> returns(n);
  for (std::size_t i = 0; i < n; ++i) returns[i] = adv[i] + values[i];
  if (n > 1) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> pgrad(policy.param_count()), vgrad(value.param_count());
  std::vector<double> upstream(policy.output_size());
  Mlp::Workspace pws, vws;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t end = std::min(n, start + config.minibatch);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(pgrad.begin(), pgrad.end(), 0.0);
      std::fill(vgrad.begin(), vgrad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = batch[order[k]];
        const double a_hat = adv[order[k]];
        const auto logits = policy.forward(s.state, pws);
        const auto logp = log_softmax(logits);
        double entropy = 0.0;
        for (double lp : logp) entropy -= std::exp(lp) * lp;
        const double ratio = std::exp(logp[s.action] - s.log_prob);
        const bool clipped = (a_hat >= 0.0 && ratio > 1.0 + config.clip) || (a_hat < 0.0 && ratio < 1.0 - config.clip);
        const double d_logp = clipped ? 0.0 : ratio * a_hat;
        for (std::size_t j = 0; j < upstream.size(); ++j) {
          const double pj = std::exp(logp[j]);
          const double d_logp_dz = (j == s.action ? 1.0 : 0.0) - pj;
          const double d_entropy_dz = -pj * (logp[j] + entropy);
          upstream[j] = scale * (-d_logp * d_logp_dz - config.entropy_coef * d_entropy_dz);
        }
        policy.backward(pws, upstream, pgrad);

        const double v = value.forward(s.state, vws)[0];
        const double dv = scale * 2.0 * config.value_coef * (v - returns[order[k]]);
        value.backward(vws, std::span<const double>(&dv, 1), vgrad);
      }
      clip_grad_norm(pgrad, config.max_grad_norm);
      clip_grad_norm(vgrad, config.max_grad_norm);
      policy_opt.step(policy.params(), pgrad);
      value_opt.step(value.params(), vgrad);
    }
  }
}

}  // namespace detail

template <typename Factory>
  requires DiscreteEnvironment<std::invoke_result_t<Factory&>>
PpoResult ppo_train(Factory&& make_env, const PpoConfig& config, std::uint64_t seed) {
  config.validate();
  auto env = make_env();
  const std::size_t n_actions = env.action_count();
  const std::size_t dim = env.state_dim();

  Rng init_rng(derive_seed(seed, 0x1417));
  Rng action_rng(derive_seed(seed, 0xAC71));
  Rng shuffle_rng(derive_seed(seed, 0x5A3B));

  PpoResult result;
  result.policy = Mlp(layer_sizes(dim, config.hidden, n_actions));
  result.policy.init(init_rng, 0.01);
  result.value = Mlp(layer_sizes(dim, config.hidden, 1));
  result.value.init(init_rng);
  Adam policy_opt(result.policy.param_count(), config.lr);
  Adam value_opt(result.value.param_count(), config.lr);

  std::vector<detail::RolloutStep> batch;
  batch.reserve(config.rollout);
  std::size_t nonfinite = 0;
  std::uint64_t step = 0;
  Mlp::Workspace ws;

  auto value_of = [&](const std::vector<double>& s) { return result.value.forward(s, ws)[0]; };

  for (std::size_t episode = 0; episode < config.episodes; ++episode) {
    std::vector<double> state = env.reset(episode_seed(seed, episode));
    if (state.size() != dim) throw ContractViolation("environment state has the wrong dimension");
    double episode_return = 0.0;
    bool done = false;
    while (!done) {
      std::vector<double> logits = result.policy.forward(state);
      if (!std::all_of(logits.begin(), logits.end(), [](double z) { return std::isfinite(z); })) {
        if (++nonfinite > config.max_nonfinite) {
          std::ostringstream msg;
          msg << "PPO: policy logits non-finite " << nonfinite << " times (episode " << episode
              << "); lower ppo.lr";
          throw TrainingError(msg.str());
        }
        for (double& z : logits)
          if (!std::isfinite(z)) z = 0.0;
      }
      const auto probs = softmax(logits);
      double u = action_rng.uniform();
      std::size_t action = n_actions - 1;
      for (std::size_t a = 0; a < n_actions; ++a) {
        if (u < probs[a]) {
          action = a;
          break;
        }
        u -= probs[a];
      }
      const double log_prob = std::log(std::max(probs[action], 1e-300));
      const double v = value_of(state);
      Transition t = env.step(action);
      ++step;
      episode_return += t.reward;
      done = t.done;
      const bool terminal = t.done && !t.truncated;
      const double next_v = terminal ? 0.0 : value_of(t.next_state);
      batch.push_back({std::move(state), action, log_prob, v, next_v, t.reward, terminal, t.done});
      state = std::move(t.next_state);

      const bool last = done && episode + 1 == config.episodes;
      if (batch.size() >= config.rollout || (last && !batch.empty())) {
        detail::ppo_update(result.policy, result.value, policy_opt, value_opt, batch, config, shuffle_rng);
        ++result.updates;
        batch.clear();
      }
    }
    result.episode_returns.push_back(episode_return);
  }
  result.env_steps = step;
  return result;
}

}  // namespace ramsemcom::rl
