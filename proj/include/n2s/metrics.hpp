// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "n2s/error.hpp"

namespace n2s {

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;  // single-label
  double f1_micro = 0.0;  // multi-label
  double seconds = 0.0;
};

inline double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> target) {
  if (predicted.size() != target.size()) throw ShapeError("accuracy: prediction and target counts differ");
  if (predicted.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == target[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

inline ConfusionCounts count_confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> target) {
  if (predicted.size() != target.size()) throw ShapeError("f1: prediction and target sizes differ");
  ConfusionCounts c;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    c.tp += predicted[k] && target[k];
    c.fp += predicted[k] && !target[k];
    c.fn += !predicted[k] && target[k];
  }
  return c;
}

/// TP / (TP + (FP + FN) / 2) over every (node, class) pair. With no positive
/// predictions and no positive targets the score is defined as 1.
inline double f1_micro(const ConfusionCounts& c) {
  if (c.tp + c.fp + c.fn == 0) return 1.0;
  return static_cast<double>(c.tp) / (static_cast<double>(c.tp) + 0.5 * static_cast<double>(c.fp + c.fn));
}

inline double f1_micro(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> target) {
  return f1_micro(count_confusion(predicted, target));
}

}  // namespace n2s
