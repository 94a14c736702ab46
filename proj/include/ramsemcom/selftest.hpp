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

// Oracle checks shared by the test suite and the `selftest` command. Each
// oracle is computed without calling the code under test: finite
// differences for gradients, a full sort for top-k, frozen bytes for the
// wire format, and value iteration for the toy MDP.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ramsemcom/channel.hpp"
#include "ramsemcom/context_protocol.hpp"
#include "ramsemcom/random.hpp"
#include "ramsemcom/rl/dqn.hpp"
#include "ramsemcom/rl/environment.hpp"
#include "ramsemcom/rl/mlp.hpp"
#include "ramsemcom/rl/ppo.hpp"
#include "ramsemcom/semantic_store.hpp"

namespace ramsemcom::oracle {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// ---- frozen wire bytes ------------------------------------------------------

struct GoldenBlock {
  const char* name;
  ContextBlock block;
  std::vector<std::uint8_t> bytes;
};

inline std::vector<GoldenBlock> golden_blocks() {
  std::vector<GoldenBlock> g;
  g.push_back({"minimal",
               {1, 0, 0, {"a"}, {}, 1},
               {0x52, 0x41, 0x4D, 0x53, 0x01, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x01, 0x61, 0x00, 0x00, 0x00, 0x00, 0xDC, 0x0E, 0x82, 0x8E}});
  g.push_back({"summary",
               {0, 100, 255, {"summary/a0", "summary"}, {0, 1, 2, 3, 4, 5, 6, 7}, 7},
               {0x52, 0x41, 0x4D, 0x53, 0x01, 0x00, 0x00, 0x00, 0x00, 0x64, 0x00, 0x00, 0x00, 0x00, 0x00,
                0x00, 0x00, 0xFF, 0x07, 0x00, 0x00, 0x00, 0x02, 0x0A, 0x73, 0x75, 0x6D, 0x6D, 0x61, 0x72,
                0x79, 0x2F, 0x61, 0x30, 0x07, 0x73, 0x75, 0x6D, 0x6D, 0x61, 0x72, 0x79, 0x08, 0x00, 0x00,
                0x00, 0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0xDA, 0x88, 0x57, 0xC8}});
  g.push_back({"utf8",
               {2, 0x0102030405060708ULL, 3, {"traffic", "veh\xC3\xAD" "culo"}, {0xDE, 0xAD, 0xBE, 0xEF}, 0xA1B2C3D4},
               {0x52, 0x41, 0x4D, 0x53, 0x01, 0x02, 0x00, 0x00, 0x00, 0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01, 0x03,
                0xD4, 0xC3, 0xB2, 0xA1, 0x02, 0x07, 0x74, 0x72, 0x61, 0x66, 0x66, 0x69, 0x63, 0x09, 0x76, 0x65, 0x68, 0xC3,
                0xAD, 0x63, 0x75, 0x6C, 0x6F, 0x04, 0x00, 0x00, 0x00, 0xDE, 0xAD, 0xBE, 0xEF, 0xB7, 0x4A, 0x48, 0x5D}});
  return g;
}

inline CheckResult check_wire_golden() {
  CheckResult r{"wire format golden bytes", true, ""};
  for (const auto& g : golden_blocks()) {
    const auto enc = encode(g.block);
    if (enc != g.bytes) {
      r.pass = false;
      r.detail += std::string(g.name) + ": encoding differs; ";
      continue;
    }
    if (decode(g.bytes) != g.block) {
      r.pass = false;
      r.detail += std::string(g.name) + ": decoding differs; ";
    }
  }
  auto bytes = golden_blocks()[1].bytes;
  auto expect = [&](auto&& fn, const char* what) {
    try {
      fn();
      r.pass = false;
      r.detail += std::string(what) + " accepted; ";
    } catch (const Error&) {
    }
  };
  auto flipped = bytes;
  flipped[30] ^= 0x01;
  expect([&] { (void)decode(std::span<const std::uint8_t>(flipped)); }, "bit flip");
  expect([&] { (void)decode(std::span<const std::uint8_t>(bytes.data(), bytes.size() - 1)); }, "truncation");
  auto magic = bytes;
  magic[0] = 'X';
  expect([&] { (void)decode(std::span<const std::uint8_t>(magic)); }, "bad magic");
  if (r.pass) r.detail = "3 frozen blocks, corruption/truncation/magic rejected";
  return r;
}

// ---- top-k against a full sort ----------------------------------------------

inline std::vector<ScoredPatch> brute_force_top_k(const std::vector<std::pair<PatchId, Embedding>>& items,
                                                  const Embedding& query, std::size_t k,
                                                  const std::set<PatchId>& exclude) {
  std::vector<ScoredPatch> all;
  for (const auto& [id, e] : items) {
    if (exclude.contains(id)) continue;
    double dot = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) dot += e[j] * query[j];
    all.push_back({id, std::clamp(dot, -1.0, 1.0)});
  }
  std::sort(all.begin(), all.end(), [](const ScoredPatch& a, const ScoredPatch& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

inline CheckResult check_top_k(std::size_t instances = 1000, std::uint64_t seed = 7) {
  CheckResult r{"top-k vs brute force", true, ""};
  Rng rng(seed);
  std::size_t ties = 0;
  for (std::size_t t = 0; t < instances && r.pass; ++t) {
    const std::size_t dim = 2 + rng.below(7);
    const std::size_t n = 1 + rng.below(100);
    std::vector<std::pair<PatchId, Embedding>> items;
    PatchIndex index(dim);
    std::vector<PatchId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<PatchId>(i * 3 + rng.below(3));
    rng.shuffle(ids);
    for (std::size_t i = 0; i < n; ++i) {
      Embedding e;
      if (i > 0 && rng.uniform() < 0.25) {
        e = items[rng.below(items.size())].second;  // exact duplicate: forces a score tie
        ++ties;
      } else {
        e = random_unit_vector(rng, dim);
      }
      items.emplace_back(ids[i], e);
      index.add(ids[i], e);
    }
    const Embedding q = random_unit_vector(rng, dim);
    std::set<PatchId> exclude;
    for (const auto& [id, e] : items)
      if (rng.uniform() < 0.2) exclude.insert(id);
    const std::size_t k = rng.below(n + 1);
    const auto got = top_k(index, q, k, exclude);
    const auto want = brute_force_top_k(items, q, k, exclude);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].id == want[i].id && std::abs(got[i].score - want[i].score) < 1e-12;
    if (!same) {
      r.pass = false;
      r.detail = "mismatch on instance " + std::to_string(t);
    }
  }
  if (r.pass) r.detail = std::to_string(instances) + " instances, " + std::to_string(ties) + " forced ties";
  return r;
}

// ---- gradients against central differences ----------------------------------

/// L = upstream . net(x) evaluated from the raw parameter layout in extended precision,
/// independently of Mlp::forward, so central differences are not swamped by double round-off.
inline long double extended_loss(const rl::Mlp& net, std::span<const double> params, const std::vector<double>& x,
                                 const std::vector<double>& upstream) {
  std::vector<long double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const double* w = params.data() + net.offset(l);
    const double* b = w + net.in(l) * net.out(l);
    std::vector<long double> z(net.out(l));
    for (std::size_t o = 0; o < z.size(); ++o) {
      long double s = b[o];
      for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(w[o * a.size() + i]) * a[i];
      z[o] = l + 1 < net.layers() ? std::tanh(s) : s;
    }
    a = std::move(z);
  }
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * upstream[i];
  return s;
}

/// Largest per-parameter relative error |g_a - g_n| / max(|g_a|, |g_n|, floor), with g_n from
/// central differences of extended_loss(). The floor only matters for gradients that are exactly zero.
inline double gradient_relative_error(const rl::Mlp& net, const std::vector<double>& x,
                                      const std::vector<double>& upstream, double h = 1e-5, double floor = 1e-12) {
  const auto analytic = net.backward(x, upstream);
  std::vector<double> params(net.params().begin(), net.params().end());
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = params[p];
    params[p] = saved + h;
    const long double up = extended_loss(net, params, x, upstream);
    params[p] = saved - h;
    const long double down = extended_loss(net, params, x, upstream);
    params[p] = saved;
    const double numeric = static_cast<double>((up - down) / (2.0L * h));
    const double scale = std::max({std::abs(analytic[p]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[p] - numeric) / scale);
  }
  return worst;
}

inline CheckResult check_gradients(std::size_t nets = 20, std::vector<std::size_t> sizes = {14, 64, 64, 125},
                                   std::uint64_t seed = 11) {
  CheckResult r{"MLP gradients vs finite differences", true, ""};
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t n = 0; n < nets; ++n) {
    rl::Mlp net(sizes);
    net.init(rng);
    std::vector<double> x(sizes.front()), up(sizes.back());
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : up) v = rng.normal();
    worst = std::max(worst, gradient_relative_error(net, x, up));
  }
  r.pass = worst < 1e-4;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu nets, worst relative error %.3g (limit 1e-4)", nets, worst);
  r.detail = buf;
  return r;
}

// ---- capacity ---------------------------------------------------------------

inline CheckResult check_capacity() {
  const double c = shannon_capacity(1e6, 15.0);
  const double expected = 1e6 * std::log2(1.0 + std::pow(10.0, 1.5));
  CheckResult r{"Shannon capacity", std::abs(c - expected) < 1e-6 && std::abs(c / 1e6 - 5.03) <= 0.01, ""};
  char buf[96];
  std::snprintf(buf, sizeof buf, "B=1 MHz, SNR=15 dB -> %.2f Mbps", c / 1e6);
  r.detail = buf;
  return r;
}

// ---- toy learning problems --------------------------------------------------

inline rl::DqnConfig chain_dqn_config() {
  rl::DqnConfig c;
  c.gamma = 0.9;
  c.episodes = 600;
  c.eps_decay_steps = 1500;
  c.target_sync = 100;
  c.buffer_capacity = 5000;
  return c;
}

/// DQN on the two-state chain must recover Q* (value iteration) to within `tol`.
inline CheckResult check_dqn_chain(std::uint64_t seed = 1, double tol = 0.05) {
  const auto cfg = chain_dqn_config();
  const auto result = rl::dqn_train([] { return rl::ChainMdp(); }, cfg, seed);
  const auto q_star = rl::ChainMdp::optimal_q(cfg.gamma);
  double worst = 0.0;
  bool greedy_ok = true;
  for (std::size_t s = 0; s < 2; ++s) {
    const auto q = result.q_network.forward(rl::ChainMdp::one_hot(s));
    for (std::size_t a = 0; a < 2; ++a) worst = std::max(worst, std::abs(q[a] - q_star[s][a]));
    greedy_ok = greedy_ok && rl::argmax(q) == rl::ChainMdp::kAdvance;
  }
  CheckResult r{"DQN recovers Q* on chain MDP", worst < tol && greedy_ok, ""};
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |Q - Q*| = %.4f (limit %.2f)", worst, tol);
  r.detail = buf;
  return r;
}

inline CheckResult check_ppo_bandit(std::uint64_t seed = 1, double min_prob = 0.95) {
  rl::PpoConfig cfg;
  cfg.episodes = 6000;
  const auto result = rl::ppo_train([] { return rl::TwoArmedBandit(); }, cfg, seed);
  const auto pi = rl::softmax(result.policy.forward(std::vector<double>{1.0}));
  CheckResult r{"PPO prefers the better bandit arm", pi[1] > min_prob, ""};
  char buf[96];
  std::snprintf(buf, sizeof buf, "p(better arm) = %.4f (limit %.2f)", pi[1], min_prob);
  r.detail = buf;
  return r;
}

inline std::vector<CheckResult> run_all() {
  std::vector<CheckResult> out;
  auto guarded = [&](const char* name, auto fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("Shannon capacity", [] { return check_capacity(); });
  guarded("wire format golden bytes", [] { return check_wire_golden(); });
  guarded("top-k vs brute force", [] { return check_top_k(); });
  guarded("MLP gradients vs finite differences", [] { return check_gradients(); });
  guarded("DQN recovers Q* on chain MDP", [] { return check_dqn_chain(); });
  guarded("PPO prefers the better bandit arm", [] { return check_ppo_bandit(); });
  return out;
}

}  // namespace ramsemcom::oracle
