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

// Round-based retrieval scheduling environment.
//
// One episode gives every agent its own scene and QA task. reset() sends the
// low-resolution summaries (round 0). Each step() is one transmission round:
// the scheduler picks a joint allocation k = (k_1..k_N); agents are served in
// order of decreasing uncertainty (ties: lower agent id first); agent i sends a
// request for its top-k_i uncached patches and the roadside unit delivers
// those that still fit in the round's bit budget. Every message is a context
// block and its encoded size is what the channel is charged.
//
// Reward per round:
//   r = w1 * tasks_completed - w2 * bits_spent / budget_bits - w3 * [episode ongoing]

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "ramsemcom/channel.hpp"
#include "ramsemcom/context_protocol.hpp"
#include "ramsemcom/core_model.hpp"
#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"
#include "ramsemcom/semantic_store.hpp"

namespace ramsemcom {

struct RewardWeights {
  double w1 = 1.0;   // per completed task
  double w2 = 0.1;   // per unit of round budget consumed
  double w3 = 0.02;  // per round while tasks remain
};

struct EnvConfig {
  std::size_t agents = 3;
  std::size_t k_max = 4;
  std::size_t max_rounds = 15;
  std::size_t top_m = 3;
  std::size_t action_cap = 1024;
  RewardWeights reward;
  SceneParams scene;
  ChannelModel channel;

  std::size_t state_dim() const { return 4 * agents + 2; }

  void validate() const {
    if (agents < 1) throw ParameterError("agents must be >= 1");
    if (max_rounds < 1) throw ParameterError("max_rounds must be >= 1");
    if (top_m < 1) throw ParameterError("top_m must be >= 1");
    scene.validate();
    channel.validate();
  }
};

using Allocation = std::vector<std::uint32_t>;

/// All (k_max+1)^agents joint allocations in lexicographic order (agent 0 most significant).
inline std::vector<Allocation> enumerate_actions(std::size_t agents, std::size_t k_max, std::size_t cap = 1024) {
  if (agents < 1) throw ParameterError("enumerate_actions: need at least one agent");
  double count = std::pow(static_cast<double>(k_max + 1), static_cast<double>(agents));
  if (count > static_cast<double>(cap))
    throw ConfigurationError("joint action space (k_max+1)^agents = " + std::to_string(static_cast<long long>(count)) +
                             " exceeds the cap of " + std::to_string(cap) + "; lower k_max or the number of agents");
  std::vector<Allocation> out;
  out.reserve(static_cast<std::size_t>(count));
  Allocation a(agents, 0);
  while (true) {
    out.push_back(a);
    std::size_t i = agents;
    while (i > 0 && a[i - 1] == k_max) a[--i] = 0;
    if (i == 0) break;
    ++a[i - 1];
  }
  return out;
}

/// Index of `a` in the lexicographic enumeration, or throws ContractViolation.
inline std::size_t action_index(const Allocation& a, std::size_t agents, std::size_t k_max) {
  if (a.size() != agents) throw ContractViolation("allocation has the wrong number of agents");
  std::size_t idx = 0;
  for (auto k : a) {
    if (k > k_max) throw ContractViolation("allocation entry exceeds k_max");
    idx = idx * (k_max + 1) + k;
  }
  return idx;
}

inline double reward(std::size_t tasks_completed, std::uint64_t bits_spent, std::uint64_t budget_bits,
                     bool episode_ongoing, const RewardWeights& w = {}) {
  const double usage = budget_bits == 0 ? 0.0 : static_cast<double>(bits_spent) / static_cast<double>(budget_bits);
  return w.w1 * static_cast<double>(tasks_completed) - w.w2 * usage - (episode_ongoing ? w.w3 : 0.0);
}

/// Flat observation: per agent [uncertainty, top-m candidate similarity, received/P, done],
/// then [next budget / reference budget, round / max_rounds].
struct EnvState {
  std::vector<double> features;
  std::size_t agents = 0;

  double uncertainty(std::size_t i) const { return features[4 * i]; }
  double candidate_similarity(std::size_t i) const { return features[4 * i + 1]; }
  double received_fraction(std::size_t i) const { return features[4 * i + 2]; }
  bool task_done(std::size_t i) const { return features[4 * i + 3] > 0.5; }
  double channel_level() const { return features[4 * agents]; }
  double progress() const { return features[4 * agents + 1]; }

  bool operator==(const EnvState&) const = default;
};

struct StepInfo {
  std::size_t tasks_completed_this_round = 0;
  std::uint64_t bits_spent = 0;
  std::uint64_t budget_bits = 0;
  std::vector<std::size_t> delivered;  // patches per agent this round
  std::size_t rejected = 0;            // patches that did not fit
};

struct StepOutcome {
  double reward = 0.0;
  EnvState next_state;
  bool done = false;
  StepInfo info;
};

/// Process-wide tally of invariant breaches seen by any environment.
struct InvariantMonitor {
  std::atomic<std::uint64_t> rounds_checked{0};
  std::atomic<std::uint64_t> budget_violations{0};
  std::atomic<std::uint64_t> dedup_violations{0};

  static InvariantMonitor& global() {
    static InvariantMonitor m;
    return m;
  }
  std::uint64_t violations() const { return budget_violations.load() + dedup_violations.load(); }
  void reset() {
    rounds_checked = 0;
    budget_violations = 0;
    dedup_violations = 0;
  }
};

inline constexpr std::uint32_t kInfrastructureSourceId = 0;

class SchedulerEnv {
 public:
  explicit SchedulerEnv(EnvConfig config)
      : config_(std::move(config)), reference_bits_(0) {
    config_.validate();
    actions_ = enumerate_actions(config_.agents, config_.k_max, config_.action_cap);
    reference_bits_ = config_.channel.reference_bits();
  }

  const EnvConfig& config() const { return config_; }
  const std::vector<Allocation>& actions() const { return actions_; }
  std::size_t action_count() const { return actions_.size(); }
  std::size_t state_dim() const { return config_.state_dim(); }
  std::size_t round_index() const { return round_index_; }
  bool done() const { return done_; }
  const std::vector<Scene>& scenes() const { return scenes_; }
  const std::vector<AgentView>& views() const { return views_; }
  const std::vector<LocalCache>& caches() const { return caches_; }
  const Repository& repository() const { return *repository_; }
  std::uint64_t summary_bits_spent() const { return summary_bits_spent_; }
  std::size_t completed_tasks() const {
    return static_cast<std::size_t>(std::count_if(scenes_.begin(), scenes_.end(),
                                                  [](const Scene& s) { return s.task.completed; }));
  }

  /// New episode: fresh scenes, empty caches, summaries sent in round 0.
  EnvState reset(std::uint64_t seed) {
    const std::size_t n = config_.agents;
    scenes_.clear();
    indexes_.clear();
    views_.clear();
    caches_.clear();
    summary_pending_.assign(n, true);
    repository_ = std::make_unique<Repository>();
    sequence_ = 0;
    round_index_ = 0;
    done_ = false;
    for (std::size_t i = 0; i < n; ++i) {
      scenes_.push_back(generate_scene(derive_seed(seed, i), config_.scene));
      indexes_.emplace_back(scenes_.back());
      AgentView v;
      v.agent_id = static_cast<std::uint32_t>(i);
      v.scene_id = scenes_.back().id;
      views_.push_back(std::move(v));
      caches_.emplace_back(static_cast<std::uint32_t>(i));
    }
    RoundBudget budget = round_budget(config_.channel, 0);
    deliver_summaries(budget);
    summary_bits_spent_ = budget.spent_bits();
    check_budget(budget);
    return observe();
  }

  StepOutcome step(std::size_t action) {
    if (action >= actions_.size()) throw ContractViolation("action index outside the enumerated action set");
    return step(actions_[action]);
  }

  StepOutcome step(const Allocation& action) {
    action_index(action, config_.agents, config_.k_max);
    if (done_) throw ContractViolation("step called on a finished episode");
    if (scenes_.empty()) throw ContractViolation("step called before reset");

    const std::size_t n = config_.agents;
    const std::uint64_t round = round_index_ + 1;
    RoundBudget budget = round_budget(config_.channel, round);
    StepInfo info;
    info.delivered.assign(n, 0);

    deliver_summaries(budget);

    for (std::size_t i : service_order()) {
      if (action[i] == 0 || summary_pending_[i]) continue;
      const auto& scene = scenes_[i];
      auto picks = top_k(indexes_[i], scene.task.query_embedding, action[i], caches_[i].held());
      if (picks.empty()) continue;
      if (!budget.try_spend(block_bits(request_block(i, picks)))) continue;
      for (const auto& pick : picks) {
        if (caches_[i].contains(pick.id)) {
          ++InvariantMonitor::global().dedup_violations;
          continue;
        }
        const Patch& patch = *scene.find(pick.id);
        if (!budget.try_spend(block_bits(patch_block(i, patch, pick.score)))) {
          ++info.rejected;
          continue;
        }
        caches_[i].insert(pick.id);
        views_[i].received_patch_ids.insert(pick.id);
        ++info.delivered[i];
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      refresh(views_[i], scenes_[i]);
      auto& task = scenes_[i].task;
      if (!task.completed && task_complete(views_[i], task)) {
        task.completed = true;
        task.completion_round = static_cast<std::uint32_t>(round);
        ++info.tasks_completed_this_round;
      }
    }

    round_index_ = round;
    done_ = completed_tasks() == n || round_index_ >= config_.max_rounds;
    check_budget(budget);

    info.bits_spent = budget.spent_bits();
    info.budget_bits = budget.budget_bits();
    StepOutcome out;
    out.reward = reward(info.tasks_completed_this_round, info.bits_spent, info.budget_bits, !done_, config_.reward);
    out.done = done_;
    out.info = std::move(info);
    out.next_state = observe();
    return out;
  }

  EnvState observe() const {
    const std::size_t n = config_.agents;
    EnvState s;
    s.agents = n;
    s.features.reserve(state_dim());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& scene = scenes_[i];
      const auto best = top_k(indexes_[i], scene.task.query_embedding, config_.top_m, caches_[i].held());
      double sim = 0.0;
      for (const auto& b : best) sim += b.score;
      if (!best.empty()) sim /= static_cast<double>(best.size());
      s.features.push_back(views_[i].uncertainty);
      s.features.push_back(std::clamp(sim, -1.0, 1.0));
      s.features.push_back(static_cast<double>(views_[i].received_patch_ids.size()) /
                           static_cast<double>(scene.patches.size()));
      s.features.push_back(scene.task.completed ? 1.0 : 0.0);
    }
    const auto next = round_budget(config_.channel, round_index_ + 1).budget_bits();
    const double level =
        reference_bits_ == 0 ? 0.0 : static_cast<double>(next) / static_cast<double>(reference_bits_);
    s.features.push_back(std::min(1.0, level));
    s.features.push_back(static_cast<double>(round_index_) / static_cast<double>(config_.max_rounds));
    return s;
  }

 private:
  /// Agents by decreasing uncertainty; equal uncertainty served by ascending id.
  std::vector<std::size_t> service_order() const {
    std::vector<std::size_t> order(config_.agents);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return views_[a].uncertainty > views_[b].uncertainty;
    });
    return order;
  }

  static std::uint64_t block_bits(const ContextBlock& b) { return 8 * encoded_size(b); }

  std::uint64_t timestamp_ms(std::uint64_t round) const {
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(round) * config_.channel.round_duration_s * 1000.0));
  }

  std::uint32_t next_version() { return ++sequence_; }

  static std::vector<std::uint8_t> padded_payload(std::uint64_t size_bits, std::uint64_t tag) {
    std::vector<std::uint8_t> payload((size_bits + 7) / 8, 0);
    for (std::size_t b = 0; b < 8 && b < payload.size(); ++b) payload[b] = static_cast<std::uint8_t>(tag >> (8 * b));
    return payload;
  }

  ContextBlock summary_block(std::size_t agent) {
    ContextBlock b;
    b.source_id = kInfrastructureSourceId;
    b.timestamp_ms = timestamp_ms(round_index_);
    b.priority = 255;
    b.tags = {"summary/a" + std::to_string(agent), "summary", "scene:" + std::to_string(scenes_[agent].id)};
    b.payload = padded_payload(scenes_[agent].summary_bits, scenes_[agent].id);
    b.version = next_version();
    return b;
  }

  ContextBlock request_block(std::size_t agent, const std::vector<ScoredPatch>& picks) {
    ContextBlock b;
    b.source_id = static_cast<std::uint32_t>(agent + 1);
    b.timestamp_ms = timestamp_ms(round_index_ + 1);
    b.priority = static_cast<std::uint8_t>(std::lround(255.0 * views_[agent].uncertainty));
    b.tags = {"request", "scene:" + std::to_string(scenes_[agent].id)};
    b.payload.reserve(4 * picks.size());
    for (const auto& p : picks)
      for (int k = 0; k < 4; ++k) b.payload.push_back(static_cast<std::uint8_t>(p.id >> (8 * k)));
    b.version = next_version();
    repository_->publish(b);
    return b;
  }

  ContextBlock patch_block(std::size_t agent, const Patch& patch, double score) {
    ContextBlock b;
    b.source_id = kInfrastructureSourceId;
    b.timestamp_ms = timestamp_ms(round_index_ + 1);
    b.priority = static_cast<std::uint8_t>(std::lround(127.5 * (std::clamp(score, -1.0, 1.0) + 1.0)));
    b.tags = {"patch/a" + std::to_string(agent), "patch"};
    b.payload = padded_payload(patch.size_bits, patch.id);
    b.version = next_version();
    return b;
  }

  /// Pending summaries go out in agent order; those that do not fit wait for the next round.
  void deliver_summaries(RoundBudget& budget) {
    for (std::size_t i = 0; i < config_.agents; ++i) {
      if (!summary_pending_[i]) continue;
      auto block = summary_block(i);
      if (budget.try_spend(block_bits(block))) {
        summary_pending_[i] = false;
        repository_->publish(std::move(block));
      }
    }
  }

  static void check_budget(const RoundBudget& budget) {
    auto& mon = InvariantMonitor::global();
    ++mon.rounds_checked;
    if (budget.spent_bits() > budget.budget_bits()) ++mon.budget_violations;
  }

  EnvConfig config_;
  std::vector<Allocation> actions_;
  std::uint64_t reference_bits_;
  std::vector<Scene> scenes_;
  std::vector<PatchIndex> indexes_;
  std::vector<AgentView> views_;
  std::vector<LocalCache> caches_;
  std::vector<bool> summary_pending_;
  std::unique_ptr<Repository> repository_ = std::make_unique<Repository>();
  std::uint32_t sequence_ = 0;
  std::uint64_t summary_bits_spent_ = 0;
  std::size_t round_index_ = 0;
  bool done_ = false;
};

// ---- baseline policies ------------------------------------------------------

class SchedulingPolicy {
 public:
  virtual ~SchedulingPolicy() = default;
  virtual std::string name() const = 0;
  virtual Allocation act(const EnvState& state) = 0;
};

class NoRetrievalPolicy final : public SchedulingPolicy {
 public:
  explicit NoRetrievalPolicy(std::size_t agents) : agents_(agents) {}
  std::string name() const override { return "no_retrieval"; }
  Allocation act(const EnvState&) override { return Allocation(agents_, 0); }

 private:
  std::size_t agents_;
};

class FixedKPolicy final : public SchedulingPolicy {
 public:
  FixedKPolicy(std::size_t agents, std::uint32_t k) : agents_(agents), k_(k) {}
  std::string name() const override { return "fixed_k"; }
  Allocation act(const EnvState&) override { return Allocation(agents_, k_); }

 private:
  std::size_t agents_;
  std::uint32_t k_;
};

class RandomKPolicy final : public SchedulingPolicy {
 public:
  RandomKPolicy(std::size_t agents, std::size_t k_max, std::uint64_t seed)
      : agents_(agents), k_max_(k_max), rng_(seed) {}
  std::string name() const override { return "random_k"; }
  Allocation act(const EnvState&) override {
    Allocation a(agents_);
    for (auto& k : a) k = static_cast<std::uint32_t>(rng_.below(k_max_ + 1));
    return a;
  }

 private:
  std::size_t agents_;
  std::size_t k_max_;
  Rng rng_;
};

/// k_i = round(k_max * uncertainty_i); finished agents get nothing.
class HeuristicUncertaintyPolicy final : public SchedulingPolicy {
 public:
  HeuristicUncertaintyPolicy(std::size_t agents, std::size_t k_max) : agents_(agents), k_max_(k_max) {}
  std::string name() const override { return "heuristic"; }
  Allocation act(const EnvState& s) override {
    Allocation a(agents_, 0);
    for (std::size_t i = 0; i < agents_; ++i) {
      if (s.task_done(i)) continue;
      const double u = std::clamp(s.uncertainty(i), 0.0, 1.0);
      a[i] = static_cast<std::uint32_t>(std::lround(static_cast<double>(k_max_) * u));
    }
    return a;
  }

 private:
  std::size_t agents_;
  std::size_t k_max_;
};

}  // namespace ramsemcom
