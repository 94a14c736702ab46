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

// Deep Q-learning with experience replay and a periodically synced target
// network. Loss per sample: 0.5 * (Q(s,a) - y)^2 with
//   y = r + gamma * (1 - terminal) * max_a' Q_target(s', a').

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"
#include "ramsemcom/rl/environment.hpp"
#include "ramsemcom/rl/mlp.hpp"
#include "ramsemcom/rl/replay_buffer.hpp"

namespace ramsemcom::rl {

struct DqnConfig {
  std::vector<std::size_t> hidden{64, 64};
  double lr = 1e-3;
  double gamma = 0.95;
  std::size_t buffer_capacity = 20'000;
  std::size_t batch_size = 64;
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::size_t eps_decay_steps = 5'000;
  std::size_t target_sync = 200;  // env steps between target copies
  std::size_t learning_starts = 0;  // 0: start once a batch is available
  std::size_t train_every = 1;
  std::size_t episodes = 200;
  double max_grad_norm = 10.0;
  double divergence_loss = 1e6;

  void validate() const {
    if (!(lr > 0.0)) throw ParameterError("dqn.lr must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("dqn.gamma must be in [0, 1]");
    if (buffer_capacity == 0) throw ParameterError("dqn.buffer must be > 0");
    if (batch_size == 0 || batch_size > buffer_capacity) throw ParameterError("dqn.batch must be in [1, dqn.buffer]");
    if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0))
      throw ParameterError("dqn epsilon values must be in [0, 1]");
    if (target_sync == 0) throw ParameterError("dqn.target_sync must be > 0");
    if (train_every == 0) throw ParameterError("dqn.train_every must be > 0");
    if (episodes == 0) throw ParameterError("dqn.episodes must be > 0");
  }

  double epsilon(std::uint64_t step) const {
    if (eps_decay_steps == 0 || step >= eps_decay_steps) return eps_end;
    const double f = static_cast<double>(step) / static_cast<double>(eps_decay_steps);
    return eps_start + f * (eps_end - eps_start);
  }
};

/// Index of the largest value; the lowest index wins ties.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct DqnResult {
  Mlp q_network;
  std::vector<double> episode_returns;
  std::vector<double> losses;  // mean loss per episode (0 before learning starts)
  std::uint64_t env_steps = 0;
};

inline std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

template <typename Factory>
  requires DiscreteEnvironment<std::invoke_result_t<Factory&>>
DqnResult dqn_train(Factory&& make_env, const DqnConfig& config, std::uint64_t seed) {
  config.validate();
  auto env = make_env();
  const std::size_t n_actions = env.action_count();
  const std::size_t dim = env.state_dim();

  Rng init_rng(derive_seed(seed, 0x1417));
  Rng explore_rng(derive_seed(seed, 0xE491));
  Rng sample_rng(derive_seed(seed, 0x5A3B));

  DqnResult result;
  Mlp& online = result.q_network;
  online = Mlp(layer_sizes(dim, config.hidden, n_actions));
  online.init(init_rng);
  Mlp target = online;
  Adam opt(online.param_count(), config.lr);
  ReplayBuffer buffer(config.buffer_capacity);
  const std::size_t learning_starts = std::max(config.learning_starts, config.batch_size);

  std::vector<Mlp::Workspace> ws(config.batch_size);
  Mlp::Workspace act_ws;
  Mlp::Workspace target_ws;
  std::vector<double> grad(online.param_count());
  std::vector<double> upstream(n_actions, 0.0);
  std::uint64_t step = 0;

  for (std::size_t episode = 0; episode < config.episodes; ++episode) {
    std::vector<double> state = env.reset(episode_seed(seed, episode));
    if (state.size() != dim) throw ContractViolation("environment state has the wrong dimension");
    double episode_return = 0.0;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    bool done = false;
    while (!done) {
      std::size_t action;
      if (explore_rng.uniform() < config.epsilon(step)) {
        action = explore_rng.below(n_actions);
      } else {
        action = argmax(online.forward(state, act_ws));
      }
      Transition t = env.step(action);
      ++step;
      episode_return += t.reward;
      done = t.done;
      buffer.push({state, action, t.reward, t.next_state, t.done && !t.truncated});
      state = std::move(t.next_state);

      if (buffer.size() >= learning_starts && step % config.train_every == 0) {
        const auto batch = buffer.sample_indices(config.batch_size, sample_rng);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        const double scale = 1.0 / static_cast<double>(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) {
          const Experience& e = buffer[batch[b]];
          double y = e.reward;
          if (!e.terminal && config.gamma > 0.0) {
            const auto q_next = target.forward(e.next_state, target_ws);
            y += config.gamma * *std::max_element(q_next.begin(), q_next.end());
          }
          const auto q = online.forward(e.state, ws[b]);
          const double err = q[e.action] - y;
          loss += 0.5 * err * err * scale;
          std::fill(upstream.begin(), upstream.end(), 0.0);
          upstream[e.action] = err * scale;
          online.backward(ws[b], upstream, grad);
        }
        if (!std::isfinite(loss) || loss > config.divergence_loss) {
          std::ostringstream msg;
          msg << "DQN diverged: batch loss " << loss << " at env step " << step << " (episode " << episode
              << "); lower dqn.lr or check reward scale";
          throw TrainingError(msg.str());
        }
        clip_grad_norm(grad, config.max_grad_norm);
        opt.step(online.params(), grad);
        loss_sum += loss;
        ++loss_count;
      }
      if (step % config.target_sync == 0) target = online;
    }
    result.episode_returns.push_back(episode_return);
    result.losses.push_back(loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0);
  }
  result.env_steps = step;
  return result;
}

}  // namespace ramsemcom::rl
