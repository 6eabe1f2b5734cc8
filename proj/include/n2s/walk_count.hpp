// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Exact integer walk counts by dense repeated multiplication. This is the
// reference the sparse precompute is checked against; it never shares code
// with the spmm path.

#include <cstdint>
#include <string>
#include <vector>

#include "n2s/error.hpp"
#include "n2s/graph.hpp"

namespace n2s {

inline constexpr std::size_t kWalkOracleMaxNodes = 2000;

/// counts[i * n + j] = number of length-`length` walks between i and j.
struct WalkCountMatrix {
  std::size_t n = 0;
  unsigned length = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * n + j]; }
};

inline WalkCountMatrix walk_count_oracle(const Graph& g, unsigned length) {
  const std::size_t n = g.num_nodes();
  if (n > kWalkOracleMaxNodes)
    throw InvalidArgument("walk_count_oracle is limited to n <= " + std::to_string(kWalkOracleMaxNodes));

  std::vector<std::uint64_t> adjacency(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (NodeId j : g.neighbors(static_cast<NodeId>(i))) adjacency[i * n + j] = 1;

  WalkCountMatrix w{n, length, std::vector<std::uint64_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i) w.counts[i * n + i] = 1;

  std::vector<std::uint64_t> next(n * n);
  for (unsigned step = 1; step <= length; ++step) {
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t lhs = w.counts[i * n + k];
        if (lhs == 0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (adjacency[k * n + j] == 0) continue;
          std::uint64_t product = 0;
          if (__builtin_mul_overflow(lhs, adjacency[k * n + j], &product) ||
              __builtin_add_overflow(next[i * n + j], product, &next[i * n + j]))
            throw NumericError("walk count overflow at length " + std::to_string(step));
        }
      }
    }
    w.counts.swap(next);
  }
  return w;
}

}  // namespace n2s
