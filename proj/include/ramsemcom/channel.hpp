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

#include <cmath>
#include <cstdint>

#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"

namespace ramsemcom {

/// Shannon capacity B * log2(1 + 10^(snr_db / 10)) in bits per second.
inline double shannon_capacity(double bandwidth_hz, double snr_db) {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
    throw ParameterError("bandwidth_hz must be positive");
  const double snr_linear = std::pow(10.0, snr_db / 10.0);
  return bandwidth_hz * std::log2(1.0 + snr_linear);
}

struct FadingConfig {
  bool enabled = false;
  double range_db = 5.0;  // offset ~ U[-range_db, +range_db]
  std::uint64_t seed = 0;
};

struct ChannelModel {
  double bandwidth_hz = 1.0e6;
  double snr_db = 15.0;
  double round_duration_s = 0.1;
  FadingConfig fading;

  void validate() const {
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
      throw ParameterError("channel.bandwidth_hz must be > 0");
    if (!(round_duration_s > 0.0) || !std::isfinite(round_duration_s))
      throw ParameterError("channel.round_duration_s must be > 0");
    if (!std::isfinite(snr_db)) throw ParameterError("channel.snr_db must be finite");
    if (fading.enabled && !(fading.range_db >= 0.0))
      throw ParameterError("channel.fading.range_db must be >= 0");
  }

  /// SNR offset applied in `round_index`; a pure function of (seed, round).
  double fading_offset_db(std::uint64_t round_index) const {
    if (!fading.enabled || fading.range_db == 0.0) return 0.0;
    Rng rng(derive_seed(fading.seed, round_index));
    return rng.uniform(-fading.range_db, fading.range_db);
  }

  /// Bits per round at the nominal SNR; the state normalisation reference.
  std::uint64_t reference_bits() const {
    return static_cast<std::uint64_t>(std::floor(shannon_capacity(bandwidth_hz, snr_db) * round_duration_s));
  }
};

class RoundBudget {
 public:
  RoundBudget() = default;
  RoundBudget(std::uint64_t round_index, double capacity_bps, std::uint64_t budget_bits)
      : round_index_(round_index), capacity_bps_(capacity_bps), budget_bits_(budget_bits) {}

  std::uint64_t round_index() const { return round_index_; }
  double capacity_bps() const { return capacity_bps_; }
  std::uint64_t budget_bits() const { return budget_bits_; }
  std::uint64_t spent_bits() const { return spent_bits_; }
  std::uint64_t remaining_bits() const { return budget_bits_ - spent_bits_; }

  /// All-or-nothing admission: spends `bits` only if they fit.
  bool try_spend(std::int64_t bits) {
    if (bits < 0) throw ParameterError("try_spend: negative bit count");
    const auto b = static_cast<std::uint64_t>(bits);
    if (b > remaining_bits()) return false;
    spent_bits_ += b;
    return true;
  }

  bool operator==(const RoundBudget&) const = default;

 private:
  std::uint64_t round_index_ = 0;
  double capacity_bps_ = 0.0;
  std::uint64_t budget_bits_ = 0;
  std::uint64_t spent_bits_ = 0;
};

inline RoundBudget round_budget(const ChannelModel& model, std::uint64_t round_index) {
  const double snr = model.snr_db + model.fading_offset_db(round_index);
  const double capacity = shannon_capacity(model.bandwidth_hz, snr);
  const auto bits = static_cast<std::uint64_t>(std::floor(capacity * model.round_duration_s));
  return RoundBudget(round_index, capacity, bits);
}

}  // namespace ramsemcom
