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

#include "ramsemcom/channel.hpp"

namespace ramsemcom {
namespace {

TEST(ShannonCapacity, OneMegahertzAtFifteenDecibels) {
  const double c = shannon_capacity(1e6, 15.0);
  EXPECT_NEAR(c / 1e6, 5.03, 0.01);
  EXPECT_GE(c, 5.02e6);
  EXPECT_LE(c, 5.04e6);
}

TEST(ShannonCapacity, UnitCases) {
  EXPECT_DOUBLE_EQ(shannon_capacity(1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(shannon_capacity(2e6, 15.0), 2.0 * shannon_capacity(1e6, 15.0));
}

TEST(ShannonCapacity, NonPositiveBandwidthIsRejected) {
  EXPECT_THROW(shannon_capacity(0.0, 15.0), ParameterError);
  EXPECT_THROW(shannon_capacity(-1.0, 15.0), ParameterError);
}

TEST(ShannonCapacity, MonotoneInSnr) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double b = rng.uniform(1.0, 1e7);
    double s1 = rng.uniform(-40.0, 60.0), s2 = rng.uniform(-40.0, 60.0);
    if (s1 > s2) std::swap(s1, s2);
    EXPECT_LE(shannon_capacity(b, s1), shannon_capacity(b, s2));
    EXPECT_GE(shannon_capacity(b, s1), 0.0);
  }
}

TEST(RoundBudget, DefaultChannelBudget) {
  const ChannelModel m;
  const auto b = round_budget(m, 0);
  EXPECT_NEAR(static_cast<double>(b.budget_bits()), 502841.0, 500.0);
  EXPECT_EQ(b.budget_bits(), static_cast<std::uint64_t>(std::floor(b.capacity_bps() * m.round_duration_s)));
  EXPECT_EQ(b.spent_bits(), 0u);
  EXPECT_EQ(m.reference_bits(), b.budget_bits());
}

TEST(RoundBudget, VanishingSnrGivesZeroBudget) {
  ChannelModel m;
  m.snr_db = -300.0;
  EXPECT_EQ(round_budget(m, 3).budget_bits(), 0u);
}

TEST(RoundBudget, SameRoundSameBudget) {
  ChannelModel m;
  m.fading.enabled = true;
  m.fading.seed = 17;
  for (std::uint64_t r = 0; r < 20; ++r) EXPECT_EQ(round_budget(m, r), round_budget(m, r));
}

TEST(RoundBudget, FadingStaysInRangeAndVaries) {
  ChannelModel m;
  m.fading.enabled = true;
  m.fading.seed = 3;
  const double lo = shannon_capacity(m.bandwidth_hz, m.snr_db - m.fading.range_db);
  const double hi = shannon_capacity(m.bandwidth_hz, m.snr_db + m.fading.range_db);
  std::set<std::uint64_t> distinct;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto b = round_budget(m, r);
    EXPECT_GE(b.capacity_bps(), lo);
    EXPECT_LE(b.capacity_bps(), hi);
    distinct.insert(b.budget_bits());
  }
  EXPECT_GT(distinct.size(), 40u);
}

TEST(TrySpend, ExactFitThenExhausted) {
  RoundBudget b(0, 1000.0, 100);
  EXPECT_TRUE(b.try_spend(100));
  EXPECT_EQ(b.spent_bits(), 100u);
  EXPECT_FALSE(b.try_spend(1));
  EXPECT_EQ(b.spent_bits(), 100u);
}

TEST(TrySpend, ThreeMediumPatchesFitTheFourthDoesNot) {
  RoundBudget b(0, 5028410.0, 502841);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(b.try_spend(131072));
  EXPECT_FALSE(b.try_spend(131072));
  EXPECT_EQ(b.spent_bits(), 3u * 131072u);
}

TEST(TrySpend, NegativeIsAParameterError) {
  RoundBudget b(0, 1.0, 10);
  EXPECT_THROW(b.try_spend(-1), ParameterError);
}

TEST(TrySpend, RandomSequencesConserveBits) {
  Rng rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    RoundBudget b(0, 0.0, rng.below(1'000'000));
    std::uint64_t accepted = 0;
    for (int i = 0; i < 20; ++i) {
      const auto bits = static_cast<std::int64_t>(rng.below(300'000));
      if (b.try_spend(bits)) accepted += static_cast<std::uint64_t>(bits);
      EXPECT_LE(b.spent_bits(), b.budget_bits());
    }
    EXPECT_EQ(accepted, b.spent_bits());
  }
}

TEST(ChannelModel, ValidateRejectsBadParameters) {
  ChannelModel m;
  m.round_duration_s = 0.0;
  EXPECT_THROW(m.validate(), ParameterError);
  m = ChannelModel{};
  m.bandwidth_hz = -5.0;
  EXPECT_THROW(m.validate(), ParameterError);
}

}  // namespace
}  // namespace ramsemcom
