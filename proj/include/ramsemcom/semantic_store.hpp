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
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ramsemcom/core_model.hpp"
#include "ramsemcom/error.hpp"

namespace ramsemcom {

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("cosine_similarity: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

struct ScoredPatch {
  PatchId id = 0;
  double score = 0.0;

  bool operator==(const ScoredPatch&) const = default;
};

/// Exact similarity index over one scene's patches. Read-only after construction.
class PatchIndex {
 public:
  explicit PatchIndex(std::size_t dimension) : dimension_(dimension) {}

  explicit PatchIndex(const Scene& scene) : dimension_(scene.task.query_embedding.size()) {
    for (const auto& p : scene.patches) add(p.id, p.embedding);
  }

  void add(PatchId id, Embedding embedding) {
    if (embedding.size() != dimension_) throw ParameterError("PatchIndex: dimension mismatch");
    if (std::abs(norm2(embedding) - 1.0) > 1e-6) throw ParameterError("PatchIndex: embedding not unit norm");
    if (!ids_.insert(id).second) throw ParameterError("PatchIndex: duplicate id " + std::to_string(id));
    entries_.emplace_back(id, std::move(embedding));
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(PatchId id) const { return ids_.contains(id); }
  const std::vector<std::pair<PatchId, Embedding>>& entries() const { return entries_; }

 private:
  std::size_t dimension_;
  std::vector<std::pair<PatchId, Embedding>> entries_;
  std::unordered_set<PatchId> ids_;
};

/// Descending score, ascending id on ties.
constexpr bool ranks_before(const ScoredPatch& a, const ScoredPatch& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

/// The `k` best non-excluded patches for `query`.
inline std::vector<ScoredPatch> top_k(const PatchIndex& index, std::span<const double> query,
                                      std::size_t k, const std::set<PatchId>& exclude = {}) {
  std::vector<ScoredPatch> candidates;
  candidates.reserve(index.size());
  for (const auto& [id, emb] : index.entries()) {
    if (exclude.contains(id)) continue;
    candidates.push_back({id, cosine_similarity(emb, query)});
  }
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(),
                    ranks_before);
  candidates.resize(n);
  return candidates;
}

/// Patches held by one agent, with lookup statistics.
class LocalCache {
 public:
  explicit LocalCache(std::uint32_t agent_id = 0) : agent_id_(agent_id) {}

  void insert(PatchId id) { held_.insert(id); }

  bool contains(PatchId id) {
    const bool hit = held_.contains(id);
    if (hit) ++hits_;
    else ++misses_;
    return hit;
  }

  std::uint32_t agent_id() const { return agent_id_; }
  const std::set<PatchId>& held() const { return held_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t lookups() const { return hits_ + misses_; }

 private:
  std::uint32_t agent_id_;
  std::set<PatchId> held_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace ramsemcom
