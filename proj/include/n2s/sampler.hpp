// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "n2s/error.hpp"
#include "n2s/graph.hpp"
#include "n2s/random.hpp"

namespace n2s {

/// Graph-free mini-batching: each epoch is a fresh uniform permutation of
/// the training nodes cut into consecutive batches (the last may be short).
class MinibatchSampler {
 public:
  MinibatchSampler(std::span<const NodeId> nodes, std::size_t batch_size, Rng rng)
      : order_(nodes.begin(), nodes.end()), batch_size_(batch_size), rng_(std::move(rng)) {
    if (order_.empty()) throw InvalidArgument("sampler needs at least one training node");
    if (batch_size_ == 0) throw InvalidArgument("batch_size must be at least 1");
  }

  std::size_t batches_per_epoch() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

  std::vector<std::vector<NodeId>> next_epoch() {
    shuffle(std::span<NodeId>(order_), rng_);
    std::vector<std::vector<NodeId>> batches;
    batches.reserve(batches_per_epoch());
    for (std::size_t begin = 0; begin < order_.size(); begin += batch_size_) {
      const std::size_t end = std::min(order_.size(), begin + batch_size_);
      batches.emplace_back(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                           order_.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
  }

 private:
  std::vector<NodeId> order_;
  std::size_t batch_size_;
  Rng rng_;
};

}  // namespace n2s
