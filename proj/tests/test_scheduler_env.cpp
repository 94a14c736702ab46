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

#include <gtest/gtest.h>

#include "ramsemcom/scheduler_env.hpp"

namespace ramsemcom {
namespace {

// Block size on the wire, counted by hand from the documented layout.
std::uint64_t wire_bits(const std::vector<std::string>& tags, std::uint64_t payload_bytes) {
  std::uint64_t n = 23 + 4 + 4 + payload_bytes;
  for (const auto& t : tags) n += 1 + t.size();
  return 8 * n;
}

double run_episode(SchedulerEnv& env, SchedulingPolicy& policy, std::uint64_t seed) {
  env.reset(seed);
  EnvState s = env.observe();
  double total = 0.0;
  bool done = false;
  while (!done) {
    auto out = env.step(policy.act(s));
    total += out.reward;
    done = out.done;
    s = out.next_state;
  }
  return total;
}

TEST(Reset, DefaultStateHasFourteenComponents) {
  SchedulerEnv env(EnvConfig{});
  EXPECT_EQ(env.reset(1).features.size(), 14u);
  EXPECT_EQ(env.state_dim(), 14u);
}

TEST(Reset, SameSeedSameState) {
  SchedulerEnv a(EnvConfig{}), b(EnvConfig{});
  EXPECT_EQ(a.reset(99), b.reset(99));
  EXPECT_NE(a.reset(99), a.reset(100));
}

TEST(Reset, SummariesAreChargedInRoundZero) {
  SchedulerEnv env(EnvConfig{});
  env.reset(5);
  std::uint64_t expected = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& s = env.scenes()[i];
    expected += wire_bits({"summary/a" + std::to_string(i), "summary", "scene:" + std::to_string(s.id)},
                          s.summary_bits / 8);
  }
  EXPECT_EQ(env.summary_bits_spent(), expected);
  EXPECT_EQ(env.repository().query({"summary"}).size(), 3u);
}

TEST(Reset, InvalidConfigIsRejected) {
  EnvConfig c;
  c.scene.critical = 100;
  EXPECT_THROW({ SchedulerEnv env(c); env.reset(1); }, ParameterError);
}

TEST(EnumerateActions, SmallCases) {
  const auto a = enumerate_actions(1, 2);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0], Allocation{0});
  EXPECT_EQ(a[1], Allocation{1});
  EXPECT_EQ(a[2], Allocation{2});
  const auto b = enumerate_actions(3, 4);
  EXPECT_EQ(b.size(), 125u);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(action_index(b[i], 3, 4), i);
}

TEST(EnumerateActions, OverCapIsAConfigurationError) {
  try {
    enumerate_actions(5, 4);  // 3125 > 1024
    FAIL() << "expected ConfigurationError";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("k_max"), std::string::npos);
  }
}

TEST(Step, ActionsOutsideTheSetAreContractViolations) {
  SchedulerEnv env(EnvConfig{});
  env.reset(1);
  EXPECT_THROW(env.step(std::size_t{125}), ContractViolation);
  EXPECT_THROW(env.step(Allocation{5, 0, 0}), ContractViolation);
  EXPECT_THROW(env.step(Allocation{1, 0}), ContractViolation);
}

TEST(Step, BeforeResetOrAfterDoneIsAContractViolation) {
  SchedulerEnv env(EnvConfig{});
  EXPECT_THROW(env.step(Allocation{0, 0, 0}), ContractViolation);
  env.reset(1);
  while (!env.step(Allocation{0, 0, 0}).done) {
  }
  EXPECT_THROW(env.step(Allocation{0, 0, 0}), ContractViolation);
}

TEST(Step, NullActionIsAPureLatencyPenalty) {
  SchedulerEnv env(EnvConfig{});
  env.reset(2);
  const auto out = env.step(Allocation{0, 0, 0});
  EXPECT_EQ(out.info.bits_spent, 0u);
  EXPECT_DOUBLE_EQ(out.reward, -0.02);
  EXPECT_FALSE(out.done);
}

// With sigma = 0 and one critical patch, the top-1 retrieval is that patch and completes the task.
EnvConfig single_critical(std::size_t agents) {
  EnvConfig c;
  c.agents = agents;
  c.scene.critical = 1;
  c.scene.sigma = 0.0;
  return c;
}

std::uint64_t hand_bits_for_top1(const SchedulerEnv& env, std::size_t agent) {
  const auto& s = env.scenes()[agent];
  const Patch* critical = nullptr;
  for (const auto& p : s.patches)
    if (p.critical) critical = &p;
  return wire_bits({"request", "scene:" + std::to_string(s.id)}, 4) +
         wire_bits({"patch/a" + std::to_string(agent), "patch"}, (critical->size_bits + 7) / 8);
}

TEST(Step, SingleAgentTopOneCompletesTask) {
  SchedulerEnv env(single_critical(1));
  env.reset(3);
  const auto out = env.step(Allocation{1});
  const auto bits = hand_bits_for_top1(env, 0);
  EXPECT_EQ(out.info.bits_spent, bits);
  EXPECT_EQ(out.info.tasks_completed_this_round, 1u);
  EXPECT_TRUE(out.done);
  EXPECT_NEAR(out.reward, 1.0 - 0.1 * static_cast<double>(bits) / static_cast<double>(out.info.budget_bits), 1e-12);
}

TEST(Step, OneOfThreeAgentsCompletesWhileOthersWait) {
  SchedulerEnv env(single_critical(3));
  env.reset(3);
  const auto out = env.step(Allocation{1, 0, 0});
  const auto bits = hand_bits_for_top1(env, 0);
  EXPECT_EQ(out.info.bits_spent, bits);
  EXPECT_EQ(out.info.tasks_completed_this_round, 1u);
  EXPECT_FALSE(out.done);
  EXPECT_NEAR(out.reward, 1.0 - 0.1 * static_cast<double>(bits) / static_cast<double>(out.info.budget_bits) - 0.02,
              1e-12);
}

TEST(Step, OversubscriptionRejectsPatchesButRespectsBudget) {
  SchedulerEnv env(EnvConfig{});
  InvariantMonitor::global().reset();
  std::size_t rejected = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env.reset(seed);
    const auto out = env.step(Allocation{4, 4, 4});
    rejected += out.info.rejected;
    EXPECT_LE(out.info.bits_spent, out.info.budget_bits);
  }
  EXPECT_GT(rejected, 0u);
  EXPECT_EQ(InvariantMonitor::global().violations(), 0u);
}

TEST(Step, RepeatedRequestsNeverResendAPatch) {
  SchedulerEnv env(EnvConfig{});
  InvariantMonitor::global().reset();
  env.reset(11);
  std::vector<std::size_t> delivered(3, 0);
  std::vector<std::uint64_t> patch_bits(3, 0);
  bool done = false;
  std::uint64_t spent = 0, counted = 0;
  const Allocation script[] = {{2, 2, 2}, {2, 0, 1}, {4, 4, 4}, {1, 1, 1}, {4, 4, 4}, {4, 4, 4}};
  for (std::size_t r = 0; !done; ++r) {
    const auto before = env.views();
    const auto& a = script[r % std::size(script)];
    const auto out = env.step(a);
    done = out.done;
    spent += out.info.bits_spent;
    for (std::size_t i = 0; i < 3; ++i) {
      delivered[i] += out.info.delivered[i];
      // Hand count: one request block plus one block per newly delivered patch.
      std::vector<PatchId> fresh;
      for (auto id : env.views()[i].received_patch_ids)
        if (!before[i].received_patch_ids.contains(id)) fresh.push_back(id);
      EXPECT_EQ(fresh.size(), out.info.delivered[i]);
      if (!fresh.empty()) {
        std::vector<std::string> req_tags{"request", "scene:" + std::to_string(env.scenes()[i].id)};
        counted += wire_bits(req_tags, 4 * std::min<std::size_t>(a[i], 24 - before[i].received_patch_ids.size()));
        for (auto id : fresh)
          counted += wire_bits({"patch/a" + std::to_string(i), "patch"}, env.scenes()[i].find(id)->size_bits / 8);
      }
    }
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(delivered[i], env.views()[i].received_patch_ids.size());
  EXPECT_LE(counted, spent);  // requests that fit but whose patches did not are the only difference
  EXPECT_EQ(InvariantMonitor::global().dedup_violations.load(), 0u);
}

TEST(Reward, Examples) {
  const RewardWeights w;
  const std::uint64_t b = 502841;
  EXPECT_DOUBLE_EQ(reward(0, 0, b, true, w), -0.02);
  EXPECT_DOUBLE_EQ(reward(2, b, b, false, w), 1.9);
  EXPECT_DOUBLE_EQ(reward(0, 0, b, false, w), 0.0);
  EXPECT_DOUBLE_EQ(reward(0, 0, 0, false, w), 0.0);
}

TEST(Baselines, NoRetrievalAndHeuristic) {
  EnvState s;
  s.agents = 3;
  s.features = {1.0, 0.5, 0.0, 0.0, 0.5, 0.5, 0.1, 0.0, 0.0, 0.2, 0.3, 0.0, 1.0, 0.1};
  EXPECT_EQ(NoRetrievalPolicy(3).act(s), (Allocation{0, 0, 0}));
  EXPECT_EQ(HeuristicUncertaintyPolicy(3, 4).act(s), (Allocation{4, 2, 0}));
  s.features[3] = 1.0;  // agent 0 done
  EXPECT_EQ(HeuristicUncertaintyPolicy(3, 4).act(s), (Allocation{0, 2, 0}));
  EXPECT_EQ(FixedKPolicy(3, 2).act(s), (Allocation{2, 2, 2}));
}

TEST(Baselines, RandomKIsSeeded) {
  RandomKPolicy a(3, 4, 42), b(3, 4, 42), c(3, 4, 43);
  EnvState s;
  bool differs = false;
  for (int i = 0; i < 50; ++i) {
    const auto x = a.act(s), y = b.act(s), z = c.act(s);
    EXPECT_EQ(x, y);
    for (auto k : x) EXPECT_LE(k, 4u);
    differs = differs || x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(EnvProperties, BoundsMonotoneProgressAndTermination) {
  EnvConfig c;
  c.channel.fading.enabled = true;
  c.channel.fading.seed = 4;
  SchedulerEnv env(c);
  RandomKPolicy policy(3, 4, 1);
  InvariantMonitor::global().reset();
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    EnvState s = env.reset(seed);
    std::size_t completed = 0;
    bool done = false;
    while (!done) {
      for (double x : s.features) {
        EXPECT_GE(x, -1.0);
        EXPECT_LE(x, 1.0);
      }
      const auto out = env.step(policy.act(s));
      EXPECT_LE(out.info.bits_spent, out.info.budget_bits);
      EXPECT_GE(env.completed_tasks(), completed);
      completed = env.completed_tasks();
      done = out.done;
      EXPECT_EQ(done, completed == 3 || env.round_index() == c.max_rounds);
      s = out.next_state;
    }
  }
  EXPECT_EQ(InvariantMonitor::global().violations(), 0u);
  EXPECT_GT(InvariantMonitor::global().rounds_checked.load(), 40u);
}

TEST(EnvProperties, FixedOneDominatesNoRetrieval) {
  SchedulerEnv env(EnvConfig{});
  FixedKPolicy one(3, 1);
  NoRetrievalPolicy none(3);
  double r1 = 0.0, r0 = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    r1 += run_episode(env, one, seed);
    r0 += run_episode(env, none, seed);
  }
  EXPECT_GT(r1 / 20.0, r0 / 20.0);
  EXPECT_NEAR(r0 / 20.0, -0.02 * 14, 1e-9);  // 14 penalised rounds, last round is terminal
}

}  // namespace
}  // namespace ramsemcom
