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

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"

namespace ramsemcom::rl {

struct Experience {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;  // no bootstrap from next_state
};

/// Fixed-capacity ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ParameterError("replay buffer capacity must be > 0");
    ring_.reserve(capacity);
  }

  void push(Experience e) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(e));
    } else {
      ring_[head_] = std::move(e);
    }
    head_ = (head_ + 1) % capacity_;
  }

  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& operator[](std::size_t i) const { return ring_[i]; }

  /// `n` distinct indices, uniformly at random (n <= size()).
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (n > ring_.size()) throw ParameterError("replay buffer: batch larger than buffer");
    std::vector<std::size_t> out;
    out.reserve(n);
    if (2 * n > ring_.size()) {
      // Partial Fisher-Yates when the batch is a large share of the buffer.
      std::vector<std::size_t> all(ring_.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.below(all.size() - i);
        std::swap(all[i], all[j]);
        out.push_back(all[i]);
      }
      return out;
    }
    std::unordered_set<std::size_t> seen;
    while (out.size() < n) {
      const std::size_t i = rng.below(ring_.size());
      if (seen.insert(i).second) out.push_back(i);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Experience> ring_;
  std::size_t head_ = 0;
};

}  // namespace ramsemcom::rl
