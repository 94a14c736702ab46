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

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ramsemcom/error.hpp"
#include "ramsemcom/random.hpp"

namespace ramsemcom::rl {

/// Fully connected network: tanh on hidden layers, linear output.
///
/// Parameters live in one flat vector. Layer l occupies
/// [W_l (n_out x n_in, row-major), b_l (n_out)] starting at offset(l).
class Mlp {
 public:
  /// Activations of one forward pass, kept for backward().
  struct Workspace {
    std::vector<std::vector<double>> activations;  // [0] = input, back() = output
  };

  Mlp() = default;

  explicit Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ParameterError("Mlp needs at least an input and an output size");
    for (auto s : sizes_)
      if (s == 0) throw ParameterError("Mlp layer sizes must be positive");
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(n);
      n += (sizes_[l] + 1) * sizes_[l + 1];
    }
    params_.assign(n, 0.0);
  }

  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases; the last layer is scaled by `output_scale`.
  void init(Rng& rng, double output_scale = 1.0) {
    for (std::size_t l = 0; l < layers(); ++l) {
      const double bound = (l + 1 == layers() ? output_scale : 1.0) / std::sqrt(static_cast<double>(in(l)));
      double* w = weights(l);
      for (std::size_t i = 0; i < in(l) * out(l); ++i) w[i] = rng.uniform(-bound, bound);
      double* b = biases(l);
      for (std::size_t i = 0; i < out(l); ++i) b[i] = 0.0;
    }
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t layers() const { return offsets_.size(); }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::size_t in(std::size_t l) const { return sizes_[l]; }
  std::size_t out(std::size_t l) const { return sizes_[l + 1]; }
  std::size_t offset(std::size_t l) const { return offsets_[l]; }
  double* weights(std::size_t l) { return params_.data() + offsets_[l]; }
  const double* weights(std::size_t l) const { return params_.data() + offsets_[l]; }
  double* biases(std::size_t l) { return weights(l) + in(l) * out(l); }
  const double* biases(std::size_t l) const { return weights(l) + in(l) * out(l); }

  std::vector<double> forward(std::span<const double> x) const {
    Workspace ws;
    forward(x, ws);
    return ws.activations.back();
  }

  /// Forward pass that keeps every activation in `ws`; returns the output.
  std::span<const double> forward(std::span<const double> x, Workspace& ws) const {
    if (x.size() != input_size())
      throw ParameterError("Mlp::forward: input has size " + std::to_string(x.size()) + ", expected " +
                           std::to_string(input_size()));
    ws.activations.resize(sizes_.size());
    ws.activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers(); ++l) {
      const auto& a = ws.activations[l];
      auto& z = ws.activations[l + 1];
      z.resize(out(l));
      const double* w = weights(l);
      const double* b = biases(l);
      const std::size_t n_in = in(l);
      for (std::size_t o = 0; o < out(l); ++o) {
        const double* row = w + o * n_in;
        double s = b[o];
        for (std::size_t i = 0; i < n_in; ++i) s += row[i] * a[i];
        z[o] = s;
      }
      if (l + 1 < layers())
        for (double& v : z) v = std::tanh(v);
    }
#ifndef NDEBUG
    bool finite_input = true;
    for (double v : x) finite_input = finite_input && std::isfinite(v);
    if (finite_input)
      for (double v : ws.activations.back()) assert(std::isfinite(v));
#endif
    return ws.activations.back();
  }

  /// Accumulates d(output . upstream)/d(params) into `grad` (same layout as params()).
  /// `ws` must hold the activations of the forward pass for the same input.
  void backward(const Workspace& ws, std::span<const double> upstream, std::span<double> grad) const {
    if (upstream.size() != output_size()) throw ParameterError("Mlp::backward: upstream gradient has wrong size");
    if (grad.size() != param_count()) throw ParameterError("Mlp::backward: gradient buffer has wrong size");
    if (ws.activations.size() != sizes_.size()) throw ParameterError("Mlp::backward: workspace is not from this net");
    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> prev;
    for (std::size_t l = layers(); l-- > 0;) {
      const auto& a = ws.activations[l];
      const std::size_t n_in = in(l);
      const std::size_t n_out = out(l);
      double* gw = grad.data() + offsets_[l];
      double* gb = gw + n_in * n_out;
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* row = gw + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) row[i] += d * a[i];
        gb[o] += d;
      }
      if (l == 0) break;
      prev.assign(n_in, 0.0);
      const double* w = weights(l);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* row = w + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) prev[i] += row[i] * d;
      }
      for (std::size_t i = 0; i < n_in; ++i) prev[i] *= 1.0 - a[i] * a[i];  // tanh'
      delta.swap(prev);
    }
  }

  /// Convenience: gradients for a single input, freshly allocated.
  std::vector<double> backward(std::span<const double> x, std::span<const double> upstream) const {
    Workspace ws;
    forward(x, ws);
    std::vector<double> grad(param_count(), 0.0);
    backward(ws, upstream, grad);
    return grad;
  }

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;

  AdamMoments() = default;
  explicit AdamMoments(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update at step `t` (t >= 1).
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                      std::uint64_t t, double lr, const AdamConfig& c = {}) {
  if (params.size() != grads.size() || moments.m.size() != params.size() || moments.v.size() != params.size())
    throw ParameterError("adam_step: shape mismatch");
  if (t == 0) throw ParameterError("adam_step: t must be >= 1");
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    moments.m[i] = c.beta1 * moments.m[i] + (1.0 - c.beta1) * g;
    moments.v[i] = c.beta2 * moments.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = moments.m[i] / bc1;
    const double v_hat = moments.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

/// Adam optimiser bound to one network.
class Adam {
 public:
  Adam(std::size_t n, double lr, AdamConfig c = {}) : moments_(n), lr_(lr), config_(c) {}

  void step(std::span<double> params, std::span<const double> grads) {
    adam_step(params, grads, moments_, ++t_, lr_, config_);
  }

  std::uint64_t steps() const { return t_; }

 private:
  AdamMoments moments_;
  double lr_;
  AdamConfig config_;
  std::uint64_t t_ = 0;
};

/// Scales `grad` in place so its L2 norm is at most `max_norm`; returns the original norm.
inline double clip_grad_norm(std::span<double> grad, double max_norm) {
  double s = 0.0;
  for (double g : grad) s += g * g;
  const double norm = std::sqrt(s);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

}  // namespace ramsemcom::rl
