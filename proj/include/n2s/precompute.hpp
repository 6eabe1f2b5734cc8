// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "n2s/error.hpp"
#include "n2s/graph.hpp"
#include "n2s/parallel.hpp"
#include "n2s/sequence.hpp"

namespace n2s {

inline constexpr unsigned kMaxHops = 16;
inline constexpr double kMagnitudeWarnThreshold = 1e300;

struct PrecomputeOptions {
  /// Receives overflow-guard warnings. Defaults to standard error.
  std::function<void(const std::string&)> warn = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
};

struct PrecomputeStats {
  std::size_t n = 0;
  std::uint64_t m = 0;
  unsigned hops = 0;
  std::size_t dim = 0;
  double seconds = 0.0;
  std::uint64_t peak_bytes_estimate = 0;
};

/// Rows [row_begin, row_end) of A * dense, where A is the binary adjacency
/// of g. Each output row sums its neighbors' input rows in ascending column
/// order; the order is part of the contract (chunked and unchunked paths and
/// every thread count produce identical bits).
inline void spmm_rows(const Graph& g, std::span<const double> dense, std::size_t cols, std::size_t row_begin,
                      std::size_t row_end, std::span<double> out) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double* dst = out.data() + (i - row_begin) * cols;
    std::fill(dst, dst + cols, 0.0);
    for (NodeId j : g.neighbors(static_cast<NodeId>(i))) {
      const double* src = dense.data() + std::size_t{j} * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  }
}

inline void spmm(const Graph& g, std::span<const double> dense, std::size_t cols, std::span<double> out) {
  const std::size_t n = g.num_nodes();
  if (dense.size() != n * cols || out.size() != n * cols)
    throw ShapeError("spmm: dense operand must be " + std::to_string(n) + " x " + std::to_string(cols));
  parallel_for(
      n, [&](std::size_t begin, std::size_t end) {
        spmm_rows(g, dense, cols, begin, end, out.subspan(begin * cols, (end - begin) * cols));
      },
      256);
}

inline std::vector<double> spmm(const Graph& g, const FeatureMatrix& x) {
  if (x.rows() != g.num_nodes())
    throw ShapeError("spmm: feature rows " + std::to_string(x.rows()) + " != graph nodes " +
                     std::to_string(g.num_nodes()));
  std::vector<double> out(x.values().size());
  spmm(g, x.values(), x.cols(), out);
  return out;
}

namespace detail {

inline void check_precompute_inputs(const Graph& g, const FeatureMatrix& x, unsigned hops) {
  if (!g.has_self_loops()) throw InvalidArgument("precompute requires a graph with self-loops (call add_self_loops)");
  if (x.rows() != g.num_nodes())
    throw ShapeError("feature rows " + std::to_string(x.rows()) + " != graph nodes " + std::to_string(g.num_nodes()));
  if (hops > kMaxHops)
    throw InvalidArgument("hop count " + std::to_string(hops) + " exceeds supported maximum " +
                          std::to_string(kMaxHops));
}

/// Throws on non-finite values; returns the largest magnitude seen.
inline double scan_magnitude(std::span<const double> values, unsigned hop) {
  double largest = 0.0;
  for (double v : values) {
    if (!std::isfinite(v))
      throw NumericError("non-finite value produced at hop l=" + std::to_string(hop) +
                         " (walk counts overflowed double precision)");
    largest = std::max(largest, std::abs(v));
  }
  return largest;
}

inline void warn_if_large(double largest, unsigned hop, const PrecomputeOptions& options) {
  if (largest > kMagnitudeWarnThreshold && options.warn)
    options.warn("hop l=" + std::to_string(hop) + " reached magnitude " + std::to_string(largest) +
                 ", close to double overflow");
}

}  // namespace detail

/// Slot l of the result is (A + I)^l X, computed with exactly `hops` sparse
/// products. Slot 0 is a copy of X.
inline SequenceTensor neighbor2seq(const Graph& g, const FeatureMatrix& x, unsigned hops,
                                   const PrecomputeOptions& options = {}) {
  detail::check_precompute_inputs(g, x, hops);
  const std::size_t n = x.rows(), d = x.cols();
  SequenceTensor seq(n, hops, d);
  for (std::size_t i = 0; i < n; ++i) std::ranges::copy(x.row(i), seq.slot(i, 0).begin());

  // Each block of rows is multiplied, scanned and scattered into the
  // sequence while it is still in cache.
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> prev(x.values().begin(), x.values().end());
  std::vector<double> next(n * d);
  std::vector<double> block_largest(blocks);
  for (unsigned hop = 1; hop <= hops; ++hop) {
    parallel_for(blocks, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t b = lo; b < hi; ++b) {
        const std::size_t begin = b * kBlock, end = std::min(n, begin + kBlock);
        const std::span<double> rows(next.data() + begin * d, (end - begin) * d);
        spmm_rows(g, prev, d, begin, end, rows);
        block_largest[b] = detail::scan_magnitude(rows, hop);
        for (std::size_t i = begin; i < end; ++i) std::copy_n(next.data() + i * d, d, seq.slot(i, hop).begin());
      }
    });
    detail::warn_if_large(blocks == 0 ? 0.0 : *std::ranges::max_element(block_largest), hop, options);
    prev.swap(next);
  }
  return seq;
}

/// Streams the same tensor as neighbor2seq straight to a sequence file,
/// processing `chunk_rows` output rows at a time. Beyond the two full
/// hop buffers only one chunk (chunk_rows x d) is held in memory.
inline PrecomputeStats neighbor2seq_chunked(const Graph& g, const FeatureMatrix& x, unsigned hops,
                                            std::size_t chunk_rows, const std::filesystem::path& out_path,
                                            const PrecomputeOptions& options = {}) {
  if (chunk_rows == 0) throw InvalidArgument("chunk_rows must be at least 1");
  detail::check_precompute_inputs(g, x, hops);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = x.rows(), d = x.cols();
  const std::size_t positions = std::size_t{hops} + 1;
  chunk_rows = std::min(chunk_rows, std::max<std::size_t>(1, n));

  auto out = io::open_output(out_path);
  write_sequence_header(out, {n, hops, static_cast<std::uint32_t>(d)});

  auto write_row = [&](std::size_t node, std::size_t position, const double* row) {
    const auto offset = kSequenceHeaderBytes + (node * positions + position) * d * sizeof(double);
    out.seekp(static_cast<std::streamoff>(offset));
    io::write_array(out, std::span<const double>(row, d));
  };

  // Extend the file to its final size up front so every seek lands inside it.
  if (n * positions * d > 0) {
    out.seekp(static_cast<std::streamoff>(kSequenceHeaderBytes + n * positions * d * sizeof(double) - 1));
    out.put('\0');
  }
  for (std::size_t i = 0; i < n; ++i) write_row(i, 0, x.row(i).data());

  std::vector<double> prev(x.values().begin(), x.values().end());
  std::vector<double> next(n * d);
  std::vector<double> chunk(chunk_rows * d);
  for (unsigned hop = 1; hop <= hops; ++hop) {
    double largest = 0.0;
    for (std::size_t begin = 0; begin < n; begin += chunk_rows) {
      const std::size_t end = std::min(n, begin + chunk_rows);
      const std::span<double> block(chunk.data(), (end - begin) * d);
      parallel_for(
          end - begin, [&](std::size_t lo, std::size_t hi) {
            spmm_rows(g, prev, d, begin + lo, begin + hi, block.subspan(lo * d, (hi - lo) * d));
          },
          256);
      largest = std::max(largest, detail::scan_magnitude(block, hop));
      std::ranges::copy(block, next.begin() + static_cast<std::ptrdiff_t>(begin * d));
      for (std::size_t i = begin; i < end; ++i) write_row(i, hop, block.data() + (i - begin) * d);
    }
    detail::warn_if_large(largest, hop, options);
    prev.swap(next);
  }
  io::finish_output(out, out_path);

  PrecomputeStats stats;
  stats.n = n;
  stats.m = g.num_edges();
  stats.hops = hops;
  stats.dim = d;
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  stats.peak_bytes_estimate = (2 * n * d + chunk_rows * d) * sizeof(double) +
                              (n + 1) * sizeof(EdgeOffset) + g.num_edges() * sizeof(NodeId);
  return stats;
}

}  // namespace n2s
