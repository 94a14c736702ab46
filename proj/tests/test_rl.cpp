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

#include <cmath>
#include <filesystem>
#include <numeric>

#include "ramsemcom/rl/checkpoint.hpp"
#include "ramsemcom/rl/dqn.hpp"
#include "ramsemcom/rl/ppo.hpp"
#include "ramsemcom/selftest.hpp"

namespace ramsemcom::rl {
namespace {

// Straightforward re-implementation: explicit nested loops over (W, b) per layer.
std::vector<double> reference_forward(const Mlp& net, std::vector<double> a) {
  const auto& sizes = net.sizes();
  const auto p = net.params();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t n_in = sizes[l], n_out = sizes[l + 1];
    std::vector<double> z(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
      double s = p[off + n_in * n_out + o];
      for (std::size_t i = 0; i < n_in; ++i) s += p[off + o * n_in + i] * a[i];
      z[o] = l + 2 < sizes.size() ? std::tanh(s) : s;
    }
    off += (n_in + 1) * n_out;
    a = std::move(z);
  }
  return a;
}

Mlp random_net(std::vector<std::size_t> sizes, std::uint64_t seed) {
  Mlp net(std::move(sizes));
  Rng rng(seed);
  net.init(rng);
  return net;
}

TEST(Mlp, ZeroParametersGiveZeroOutput) {
  Mlp net({3, 4, 2});
  const auto y = net.forward(std::vector<double>{1.0, -2.0, 3.0});
  EXPECT_EQ(y, (std::vector<double>{0.0, 0.0}));
}

TEST(Mlp, TanhOfZeroIsZero) {
  Mlp net({1, 1, 1});
  for (double& p : net.params()) p = 1.0;
  net.biases(0)[0] = 0.0;
  net.biases(1)[0] = 0.0;
  EXPECT_EQ(net.forward(std::vector<double>{0.0})[0], 0.0);
}

TEST(Mlp, MatchesReferenceForward) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto net = random_net({5, 7, 6, 3}, 100 + t);
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    const auto got = net.forward(x);
    const auto want = reference_forward(net, x);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Mlp, ParameterCountFormula) {
  Mlp net({14, 64, 64, 125});
  EXPECT_EQ(net.param_count(), 15u * 64 + 65u * 64 + 65u * 125);
}

TEST(Mlp, ShapeMismatchesAreParameterErrors) {
  Mlp net({3, 2});
  EXPECT_THROW(net.forward(std::vector<double>{1.0}), ParameterError);
  EXPECT_THROW(net.backward(std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{1.0}), ParameterError);
}

TEST(Backward, TwentyRandomNetsMatchFiniteDifferences) {
  const auto r = oracle::check_gradients(20, {14, 64, 64, 125}, 21);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Backward, SmallNetsMatchFiniteDifferences) {
  Rng rng(4);
  for (int t = 0; t < 30; ++t) {
    const auto net = random_net({3, 5, 4, 2}, 500 + t);
    std::vector<double> x(3), up(2);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : up) v = rng.normal();
    EXPECT_LT(oracle::gradient_relative_error(net, x, up), 1e-6);
  }
}

TEST(Backward, ZeroUpstreamGivesZeroAndScalingIsLinear) {
  const auto net = random_net({4, 8, 3}, 9);
  const std::vector<double> x{0.1, -0.4, 0.7, 0.2};
  const auto zero = net.backward(x, std::vector<double>{0.0, 0.0, 0.0});
  EXPECT_TRUE(std::all_of(zero.begin(), zero.end(), [](double g) { return g == 0.0; }));
  // Output unit 1 unused: its weight row and bias receive no gradient.
  const auto g = net.backward(x, std::vector<double>{0.5, 0.0, -1.0});
  const std::size_t last = net.layers() - 1;
  const std::size_t w_off = net.offset(last);
  for (std::size_t i = 0; i < net.in(last); ++i) EXPECT_EQ(g[w_off + 1 * net.in(last) + i], 0.0);
  EXPECT_EQ(g[w_off + net.in(last) * net.out(last) + 1], 0.0);
  const auto g2 = net.backward(x, std::vector<double>{1.0, 0.0, -2.0});
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(g2[i], 2.0 * g[i]);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<double> p{1.0, -2.0, 3.0};
  const auto before = p;
  AdamMoments m(3);
  adam_step(p, std::vector<double>(3, 0.0), m, 1, 0.1);
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  std::vector<double> p{0.0, 0.0, 0.0};
  AdamMoments m(3);
  adam_step(p, std::vector<double>{0.3, -7.0, 1e-3}, m, 1, 0.01);
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-9);
  EXPECT_NEAR(p[2], -0.01, 1e-7);
}

TEST(Adam, IdenticalCallsGiveIdenticalResults) {
  std::vector<double> a{0.5, 0.25}, b = a;
  AdamMoments ma(2), mb(2);
  for (std::uint64_t t = 1; t <= 5; ++t) {
    const std::vector<double> g{0.1 * static_cast<double>(t), -0.2};
    adam_step(a, g, ma, t, 0.01);
    adam_step(b, g, mb, t, 0.01);
  }
  EXPECT_EQ(a, b);
  EXPECT_THROW(adam_step(a, std::vector<double>{0.0, 0.0}, ma, 0, 0.01), ParameterError);
}

TEST(ReplayBuffer, RingAndDistinctSampling) {
  ReplayBuffer buf(10);
  for (int i = 0; i < 25; ++i) buf.push({{static_cast<double>(i)}, 0, 0.0, {0.0}, false});
  EXPECT_EQ(buf.size(), 10u);
  std::set<double> held;
  for (std::size_t i = 0; i < buf.size(); ++i) held.insert(buf[i].state[0]);
  EXPECT_EQ(*held.begin(), 15.0);
  Rng rng(1);
  for (std::size_t n : {1u, 4u, 6u, 10u}) {
    const auto idx = buf.sample_indices(n, rng);
    EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), n);
    for (auto i : idx) EXPECT_LT(i, buf.size());
  }
  EXPECT_THROW(buf.sample_indices(11, rng), ParameterError);
}

TEST(Dqn, RecoversOptimalQOnChain) {
  const auto r = oracle::check_dqn_chain(1, 0.05);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Dqn, ZeroDiscountLearnsImmediateReward) {
  auto cfg = oracle::chain_dqn_config();
  cfg.gamma = 0.0;
  const auto result = dqn_train([] { return ChainMdp(); }, cfg, 1);
  const auto q0 = result.q_network.forward(ChainMdp::one_hot(0));
  const auto q1 = result.q_network.forward(ChainMdp::one_hot(1));
  EXPECT_NEAR(q0[0], 0.0, 0.05);
  EXPECT_NEAR(q0[1], 0.0, 0.05);
  EXPECT_NEAR(q1[0], 0.1, 0.05);
  EXPECT_NEAR(q1[1], 1.0, 0.05);
}

TEST(Dqn, SameSeedSameTrace) {
  auto cfg = oracle::chain_dqn_config();
  cfg.episodes = 60;
  const auto a = dqn_train([] { return ChainMdp(); }, cfg, 5);
  const auto b = dqn_train([] { return ChainMdp(); }, cfg, 5);
  EXPECT_EQ(a.episode_returns, b.episode_returns);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.q_network, b.q_network);
}

TEST(Dqn, DivergenceIsReported) {
  DqnConfig cfg;
  cfg.episodes = 200;
  cfg.batch_size = 4;
  EXPECT_THROW(dqn_train([] { return TwoArmedBandit(0.0, 1e5); }, cfg, 1), TrainingError);
}

TEST(Ppo, PrefersBetterBanditArm) {
  const auto r = oracle::check_ppo_bandit(1, 0.95);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Ppo, HugeClipEqualsUnclippedObjective) {
  Rng rng(6);
  std::vector<double> ratios(64), adv(64);
  for (auto& r : ratios) r = std::exp(rng.uniform(-1.0, 1.0));
  for (auto& a : adv) a = rng.normal();
  EXPECT_EQ(clipped_surrogate(ratios, adv, 1e12), unclipped_surrogate(ratios, adv));
  EXPECT_LT(clipped_surrogate(ratios, adv, 0.2), unclipped_surrogate(ratios, adv));
}

TEST(Ppo, SoftmaxIsADistribution) {
  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> z(125);
    for (auto& v : z) v = rng.uniform(-50.0, 50.0);
    const auto p = softmax(z);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double v : p) EXPECT_GE(v, 0.0);
    const auto lp = log_softmax(z);
    for (std::size_t i = 0; i < z.size(); ++i)
      if (p[i] > 1e-300) {
        EXPECT_NEAR(std::exp(lp[i]), p[i], 1e-12);
      }
  }
}

TEST(Ppo, GaeMatchesHandComputation) {
  // Two-step episode then a one-step episode; gamma 0.5, lambda 0.5.
  const std::vector<double> r{1.0, 2.0, 3.0}, v{0.5, 1.0, 2.0}, nv{1.0, 0.0, 0.0};
  const std::vector<bool> term{false, true, true}, end{false, true, true};
  const auto adv = compute_gae(r, v, nv, term, end, 0.5, 0.5);
  const double d1 = 2.0 - 1.0;
  const double d0 = 1.0 + 0.5 * 1.0 - 0.5;
  EXPECT_DOUBLE_EQ(adv[2], 1.0);
  EXPECT_DOUBLE_EQ(adv[1], d1);
  EXPECT_DOUBLE_EQ(adv[0], d0 + 0.25 * d1);
}

TEST(Ppo, SameSeedSameTrace) {
  PpoConfig cfg;
  cfg.episodes = 700;
  const auto a = ppo_train([] { return TwoArmedBandit(); }, cfg, 3);
  const auto b = ppo_train([] { return TwoArmedBandit(); }, cfg, 3);
  EXPECT_EQ(a.episode_returns, b.episode_returns);
  EXPECT_EQ(a.policy, b.policy);
  EXPECT_EQ(a.updates, 2u);
}

TEST(Checkpoint, RoundTripAndErrors) {
  const auto net = random_net({14, 64, 64, 125}, 12);
  const auto bytes = serialize_checkpoint(net);
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 4 * 4 + 8 * net.param_count() + 4);
  EXPECT_EQ(deserialize_checkpoint(bytes), net);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad), FormatError);
  bad = bytes;
  bad[100] ^= 1;
  EXPECT_THROW(deserialize_checkpoint(bad), CorruptionError);
  EXPECT_THROW(deserialize_checkpoint(std::span(bytes).first(bytes.size() - 3)), LengthError);

  const auto path = std::filesystem::temp_directory_path() / "ramsemcom_ckpt_test.rlck";
  save_checkpoint(net, path.string());
  EXPECT_EQ(load_checkpoint(path.string()), net);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.rlck"), IoError);
}

}  // namespace
}  // namespace ramsemcom::rl
