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

// Scenes, patches, tasks and the agent-side coverage model.
//
// A task is answered correctly iff the weighted fraction of the scene's
// critical patches held by the agent reaches the task threshold:
//
//   coverage = sum(importance of received critical) / sum(importance of critical)
//
// Synthetic scenes plant relevance: critical patches point near the task
// query, the rest are uniform on the sphere.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"

namespace ramsemcom {

using PatchId = std::uint32_t;
using Embedding = std::vector<double>;

struct Patch {
  PatchId id = 0;
  Embedding embedding;
  double importance = 0.0;
  std::uint64_t size_bits = 0;
  bool critical = false;

  bool operator==(const Patch&) const = default;
};

struct Task {
  std::uint64_t scene_id = 0;
  Embedding query_embedding;
  double theta = 0.8;
  bool completed = false;
  std::optional<std::uint32_t> completion_round;

  bool operator==(const Task&) const = default;
};

struct Scene {
  std::uint64_t id = 0;
  std::vector<Patch> patches;
  std::uint64_t summary_bits = 0;
  Task task;

  bool operator==(const Scene&) const = default;

  const Patch* find(PatchId pid) const {
    // Generated scenes use dense ids; imported ones may not.
    if (pid < patches.size() && patches[pid].id == pid) return &patches[pid];
    for (const auto& p : patches)
      if (p.id == pid) return &p;
    return nullptr;
  }

  double critical_importance() const {
    double total = 0.0;
    for (const auto& p : patches)
      if (p.critical) total += p.importance;
    return total;
  }
};

struct SceneParams {
  std::size_t dimension = 32;
  std::size_t patches = 24;
  std::size_t critical = 6;
  double theta = 0.8;
  double sigma = 0.25;
  std::uint64_t summary_bits = 65'536;
  std::vector<std::uint64_t> size_bits_choices{65'536, 131'072, 262'144};

  void validate() const {
    if (dimension < 2) throw ParameterError("scene.dimension must be >= 2");
    if (patches < 1) throw ParameterError("scene.patches must be >= 1");
    if (critical < 1 || critical > patches)
      throw ParameterError("scene.critical must be in [1, scene.patches]");
    if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("scene.theta must be in (0, 1]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("scene.sigma must be >= 0");
    if (summary_bits == 0) throw ParameterError("scene.summary_bits must be > 0");
    if (size_bits_choices.empty()) throw ParameterError("scene.size_bits must not be empty");
    for (auto s : size_bits_choices)
      if (s == 0) throw ParameterError("scene.size_bits entries must be > 0");
  }
};

struct AgentView {
  std::uint32_t agent_id = 0;
  std::uint64_t scene_id = 0;
  std::set<PatchId> received_patch_ids;
  double coverage = 0.0;
  double uncertainty = 1.0;
};

inline double norm2(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline void normalize(Embedding& v) {
  const double n = norm2(v);
  if (n == 0.0) throw ParameterError("cannot normalise a zero vector");
  for (double& x : v) x /= n;
}

inline Embedding random_unit_vector(Rng& rng, std::size_t dim) {
  Embedding v(dim);
  double n = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    n = norm2(v);
  } while (n < 1e-12);
  for (double& x : v) x /= n;
  return v;
}

/// Checks every Scene/Patch/Task invariant; throws IntegrityError on the first violation.
inline void validate_scene(const Scene& scene) {
  if (scene.summary_bits == 0) throw IntegrityError("scene summary_bits must be > 0");
  if (scene.patches.empty()) throw IntegrityError("scene has no patches");
  const std::size_t dim = scene.task.query_embedding.size();
  if (dim < 2) throw IntegrityError("task query_embedding must have dimension >= 2");
  if (std::abs(norm2(scene.task.query_embedding) - 1.0) > 1e-9)
    throw IntegrityError("task query_embedding is not unit norm");
  if (!(scene.task.theta > 0.0 && scene.task.theta <= 1.0))
    throw IntegrityError("task theta must be in (0, 1]");
  std::unordered_set<PatchId> ids;
  bool any_critical = false;
  for (const auto& p : scene.patches) {
    if (!ids.insert(p.id).second)
      throw IntegrityError("duplicate patch id " + std::to_string(p.id));
    if (p.embedding.size() != dim)
      throw IntegrityError("patch " + std::to_string(p.id) + " has wrong dimension");
    if (std::abs(norm2(p.embedding) - 1.0) > 1e-9)
      throw IntegrityError("patch " + std::to_string(p.id) + " embedding is not unit norm");
    if (p.size_bits == 0) throw IntegrityError("patch " + std::to_string(p.id) + " has size 0");
    if (!(p.importance >= 0.0 && p.importance <= 1.0))
      throw IntegrityError("patch " + std::to_string(p.id) + " importance outside [0,1]");
    if (p.critical && !(p.importance > 0.0))
      throw IntegrityError("critical patch " + std::to_string(p.id) + " has zero importance");
    any_critical = any_critical || p.critical;
  }
  if (!any_critical) throw IntegrityError("scene has no critical patch");
}

/// Deterministic synthetic scene + task for `seed`.
inline Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  params.validate();
  Rng rng(seed);
  Scene scene;
  scene.id = seed;
  scene.summary_bits = params.summary_bits;
  scene.task.scene_id = seed;
  scene.task.theta = params.theta;
  scene.task.query_embedding = random_unit_vector(rng, params.dimension);

  std::vector<bool> critical(params.patches, false);
  for (std::size_t i = 0; i < params.critical; ++i) critical[i] = true;
  rng.shuffle(critical);

  std::vector<double> weights(params.critical);
  double weight_sum = 0.0;
  for (double& w : weights) {
    w = rng.exponential();
    weight_sum += w;
  }

  scene.patches.reserve(params.patches);
  std::size_t next_weight = 0;
  for (std::size_t i = 0; i < params.patches; ++i) {
    Patch p;
    p.id = static_cast<PatchId>(i);
    p.critical = critical[i];
    if (p.critical) {
      Embedding e = scene.task.query_embedding;
      for (double& x : e) x += params.sigma * rng.normal();
      normalize(e);
      p.embedding = std::move(e);
      p.importance = weights[next_weight++] / weight_sum;
    } else {
      p.embedding = random_unit_vector(rng, params.dimension);
      p.importance = 0.0;
    }
    p.size_bits = params.size_bits_choices[rng.below(params.size_bits_choices.size())];
    scene.patches.push_back(std::move(p));
  }
  return scene;
}

/// Weighted critical coverage of `view` in `scene`.
inline double coverage(const AgentView& view, const Scene& scene) {
  if (view.scene_id != scene.id) throw IntegrityError("agent view belongs to a different scene");
  double held = 0.0;
  for (PatchId pid : view.received_patch_ids) {
    const Patch* p = scene.find(pid);
    if (p == nullptr) throw IntegrityError("unknown patch id " + std::to_string(pid));
    if (p->critical) held += p->importance;
  }
  const double total = scene.critical_importance();
  if (total <= 0.0) throw IntegrityError("scene has no critical importance");
  return std::min(1.0, held / total);
}

/// Recomputes the derived fields of `view` after its received set changed.
inline void refresh(AgentView& view, const Scene& scene) {
  view.coverage = coverage(view, scene);
  view.uncertainty = 1.0 - view.coverage;
}

inline bool task_complete(const AgentView& view, const Task& task) {
  if (view.scene_id != task.scene_id) throw IntegrityError("agent view and task refer to different scenes");
  return view.coverage >= task.theta;
}

// ---- JSON layout ------------------------------------------------------------

inline nlohmann::json to_json(const Scene& scene) {
  nlohmann::json j;
  j["id"] = scene.id;
  j["summary_bits"] = scene.summary_bits;
  auto& patches = j["patches"] = nlohmann::json::array();
  for (const auto& p : scene.patches) {
    patches.push_back({{"id", p.id},
                       {"embedding", p.embedding},
                       {"importance", p.importance},
                       {"size_bits", p.size_bits},
                       {"critical", p.critical}});
  }
  j["task"] = {{"query_embedding", scene.task.query_embedding}, {"theta", scene.task.theta}};
  return j;
}

/// Imports a scene; the result is validated.
inline Scene scene_from_json(const nlohmann::json& j) {
  Scene scene;
  try {
    scene.id = j.at("id").get<std::uint64_t>();
    scene.summary_bits = j.at("summary_bits").get<std::uint64_t>();
    for (const auto& jp : j.at("patches")) {
      Patch p;
      p.id = jp.at("id").get<PatchId>();
      p.embedding = jp.at("embedding").get<Embedding>();
      p.importance = jp.at("importance").get<double>();
      p.size_bits = jp.at("size_bits").get<std::uint64_t>();
      p.critical = jp.at("critical").get<bool>();
      scene.patches.push_back(std::move(p));
    }
    const auto& jt = j.at("task");
    scene.task.scene_id = scene.id;
    scene.task.query_embedding = jt.at("query_embedding").get<Embedding>();
    scene.task.theta = jt.at("theta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed scene JSON: ") + e.what());
  }
  validate_scene(scene);
  return scene;
}

}  // namespace ramsemcom
