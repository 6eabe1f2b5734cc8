// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "n2s/error.hpp"
#include "n2s/tensor.hpp"

namespace n2s {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with L2 weight decay folded into the gradient (g + wd * w) before
/// the moment updates.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const AdamConfig& config, std::span<const Parameter> params) : config_(config) {
    first_.reserve(params.size());
    second_.reserve(params.size());
    for (const auto& p : params) {
      first_.emplace_back(p.tensor.size(), 0.0);
      second_.emplace_back(p.tensor.size(), 0.0);
    }
  }

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return step_; }

  void step(std::span<Parameter> params) {
    if (params.size() != first_.size()) throw ShapeError("AdamState: parameter list changed");
    ++step_;
    const double t = static_cast<double>(step_);
    const double correct1 = 1.0 - std::pow(config_.beta1, t);
    const double correct2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].tensor.values();
      auto g = params[i].tensor.grad();
      auto& m = first_[i];
      auto& v = second_[i];
      if (w.size() != m.size()) throw ShapeError("AdamState: parameter " + params[i].name + " changed size");
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double grad = g[k] + config_.weight_decay * w[k];
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * grad;
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * grad * grad;
        const double m_hat = m[k] / correct1;
        const double v_hat = v[k] / correct2;
        w[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace n2s
