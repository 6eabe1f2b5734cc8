// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Desk-scale synthetic node-classification tasks. Every generator is a pure
// function of its spec (including the seed).

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "n2s/error.hpp"
#include "n2s/graph.hpp"
#include "n2s/random.hpp"

namespace n2s {

enum class SyntheticKind { kPlantedColorDenoise, kOrderProbe, kSbm };

inline SyntheticKind parse_synthetic_kind(std::string_view s) {
  if (s == "planted-color-denoise") return SyntheticKind::kPlantedColorDenoise;
  if (s == "order-probe") return SyntheticKind::kOrderProbe;
  if (s == "sbm") return SyntheticKind::kSbm;
  throw InvalidArgument("unknown synthetic kind \"" + std::string(s) +
                        "\" (expected planted-color-denoise, order-probe or sbm)");
}

inline std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::kPlantedColorDenoise: return "planted-color-denoise";
    case SyntheticKind::kOrderProbe: return "order-probe";
    case SyntheticKind::kSbm: return "sbm";
  }
  return "?";
}

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kPlantedColorDenoise;
  std::size_t n = 1000;            // labeled nodes (order-probe adds satellite chains)
  std::uint64_t seed = 0;
  std::uint32_t num_classes = 2;   // communities; order-probe uses `hops` classes
  double p_in = 0.05;
  double p_out = 0.005;
  double noise = 0.4;              // flip probability (denoise) or Gaussian stddev (sbm, order-probe)
  unsigned hops = 4;               // order-probe: chain length / number of classes
  std::size_t feature_dim = 8;     // order-probe: 1 signal channel + noise channels
  double signal = 1.0;             // order-probe: planted signal amplitude
  double train_fraction = 0.6;
  double val_fraction = 0.2;

  void validate() const {
    auto probability = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
    };
    if (n == 0) throw InvalidArgument("synthetic n must be positive");
    probability(train_fraction, "train_fraction");
    probability(val_fraction, "val_fraction");
    if (train_fraction + val_fraction > 1.0) throw InvalidArgument("train_fraction + val_fraction exceeds 1");
    if (static_cast<std::size_t>(train_fraction * static_cast<double>(n)) == 0)
      throw InvalidArgument("train split would be empty");
    switch (kind) {
      case SyntheticKind::kPlantedColorDenoise:
        probability(p_in, "p_in");
        probability(p_out, "p_out");
        probability(noise, "flip probability");
        if (num_classes < 2 && noise > 0.0) throw InvalidArgument("label noise needs at least 2 classes");
        if (num_classes == 0) throw InvalidArgument("num_classes must be positive");
        break;
      case SyntheticKind::kSbm:
        probability(p_in, "p_in");
        probability(p_out, "p_out");
        if (num_classes == 0) throw InvalidArgument("num_classes must be positive");
        if (!(noise >= 0.0)) throw InvalidArgument("noise stddev must be non-negative");
        break;
      case SyntheticKind::kOrderProbe:
        if (hops < 1) throw InvalidArgument("order-probe needs hops >= 1 (the signal position starts at 1)");
        if (hops > 16) throw InvalidArgument("order-probe supports at most 16 hops");
        if (feature_dim < 1) throw InvalidArgument("order-probe needs feature_dim >= 1");
        if (!(noise >= 0.0)) throw InvalidArgument("noise stddev must be non-negative");
        break;
    }
  }
};

struct SyntheticData {
  Graph graph;  // without self-loops
  FeatureMatrix features;
  LabelSet labels;
  NodeSplit split;
};

namespace detail {

/// Appends every pair of a block independently with probability p, using
/// geometric skips so the cost is proportional to the number of edges.
inline void sample_block(std::span<const NodeId> rows, std::span<const NodeId> cols, bool same_block, double p,
                         Rng& rng, std::vector<std::pair<NodeId, NodeId>>& edges) {
  if (p <= 0.0) return;
  if (same_block) {
    const std::size_t s = rows.size();
    if (s < 2) return;
    std::size_t r = 0, offset = 0;  // pair (r, r + 1 + offset)
    std::uint64_t gap = geometric_gap(rng, p);
    while (true) {
      // advance by `gap` pairs
      while (r < s - 1 && gap >= (s - 1 - r) - offset) {
        gap -= (s - 1 - r) - offset;
        ++r;
        offset = 0;
      }
      if (r >= s - 1) return;
      offset += gap;
      edges.emplace_back(rows[r], rows[r + 1 + offset]);
      ++offset;
      gap = geometric_gap(rng, p);
    }
  }
  const std::uint64_t total = std::uint64_t{rows.size()} * cols.size();
  std::uint64_t t = geometric_gap(rng, p);
  while (t < total) {
    edges.emplace_back(rows[t / cols.size()], cols[t % cols.size()]);
    const std::uint64_t gap = geometric_gap(rng, p);
    if (gap >= total) return;
    t += gap + 1;
  }
}

inline std::vector<std::pair<NodeId, NodeId>> sbm_edges(std::span<const std::uint32_t> community,
                                                        std::uint32_t communities, double p_in, double p_out,
                                                        Rng& rng) {
  std::vector<std::vector<NodeId>> members(communities);
  for (std::size_t i = 0; i < community.size(); ++i) members[community[i]].push_back(static_cast<NodeId>(i));
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::uint32_t a = 0; a < communities; ++a)
    for (std::uint32_t b = a; b < communities; ++b)
      sample_block(members[a], members[b], a == b, a == b ? p_in : p_out, rng, edges);
  return edges;
}

inline NodeSplit random_split(std::size_t n, double train_fraction, double val_fraction, Rng& rng) {
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
  shuffle(std::span<NodeId>(order), rng);
  const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(val_fraction * static_cast<double>(n)));
  NodeSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  std::ranges::sort(split.train);
  std::ranges::sort(split.val);
  std::ranges::sort(split.test);
  return split;
}

/// Signal coefficients for a chain core - c1 - ... - cL (with self-loops)
/// such that the core's l-hop walk-weighted sum of the coefficients is
/// exactly 1 at l = target and 0 at every other l in [0, L].
inline std::vector<double> chain_signal_coefficients(unsigned hops, unsigned target) {
  const std::size_t len = std::size_t{hops} + 1;
  // walks[l][k]: number of length-l walks from the core (node 0) to node k.
  std::vector<std::vector<double>> walks(len, std::vector<double>(len, 0.0));
  walks[0][0] = 1.0;
  for (std::size_t l = 1; l < len; ++l)
    for (std::size_t k = 0; k < len; ++k) {
      double w = walks[l - 1][k];
      if (k > 0) w += walks[l - 1][k - 1];
      if (k + 1 < len) w += walks[l - 1][k + 1];
      walks[l][k] = w;
    }
  // Lower-triangular system with unit diagonal (walks[l][l] = 1).
  std::vector<double> coef(len, 0.0);
  for (std::size_t l = 1; l < len; ++l) {
    double rhs = (l == target) ? 1.0 : 0.0;
    for (std::size_t k = 1; k < l; ++k) rhs -= walks[l][k] * coef[k];
    coef[l] = rhs;
  }
  return coef;
}

inline SyntheticData gen_community_task(const SyntheticSpec& spec, Rng& rng) {
  const std::uint32_t c = spec.num_classes;
  const std::size_t n = spec.n;
  std::vector<std::uint32_t> community(n);
  for (auto& v : community) v = static_cast<std::uint32_t>(uniform_index(rng, c));
  const auto edges = sbm_edges(community, c, spec.p_in, spec.p_out, rng);

  std::vector<double> x(n * c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.kind == SyntheticKind::kPlantedColorDenoise) {
      std::uint32_t color = community[i];
      if (c > 1 && bernoulli(rng, spec.noise))
        color = static_cast<std::uint32_t>((color + 1 + uniform_index(rng, c - 1)) % c);
      x[i * c + color] = 1.0;
    } else {
      for (std::uint32_t k = 0; k < c; ++k) x[i * c + k] = (k == community[i] ? 1.0 : 0.0) + normal(rng, 0.0, spec.noise);
    }
  }
  SyntheticData data;
  data.graph = Graph::from_edges(static_cast<NodeId>(n), edges);
  data.features = FeatureMatrix(n, c, std::move(x));
  data.labels = LabelSet::single(c, std::move(community));
  data.split = random_split(n, spec.train_fraction, spec.val_fraction, rng);
  return data;
}

/// Node i (a "core") gets a private chain of `hops` satellites. Channel 0
/// carries a planted signal arranged so that the core's hop-l aggregate
/// is non-zero in that channel only at l = label + 1; all other channels
/// are Gaussian noise. Satellites are excluded from every split.
inline SyntheticData gen_order_probe(const SyntheticSpec& spec, Rng& rng) {
  const std::size_t cores = spec.n, hops = spec.hops, d = spec.feature_dim;
  const std::size_t total = cores * (1 + hops);
  auto satellite = [&](std::size_t core, std::size_t k) { return static_cast<NodeId>(cores + core * hops + (k - 1)); };

  std::vector<std::vector<double>> coefficients(hops + 1);
  for (unsigned target = 1; target <= hops; ++target)
    coefficients[target] = chain_signal_coefficients(static_cast<unsigned>(hops), target);

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(cores * hops);
  std::vector<std::uint32_t> labels(total, 0);
  std::vector<double> x(total * d, 0.0);
  for (std::size_t i = 0; i < cores; ++i) {
    const auto label = static_cast<std::uint32_t>(uniform_index(rng, hops));
    labels[i] = label;
    NodeId prev = static_cast<NodeId>(i);
    for (std::size_t k = 1; k <= hops; ++k) {
      const NodeId s = satellite(i, k);
      edges.emplace_back(prev, s);
      labels[s] = label;
      x[std::size_t{s} * d] = spec.signal * coefficients[label + 1][k];
      prev = s;
    }
  }
  for (std::size_t v = 0; v < total; ++v)
    for (std::size_t c = 1; c < d; ++c) x[v * d + c] = normal(rng, 0.0, spec.noise);

  SyntheticData data;
  data.graph = Graph::from_edges(static_cast<NodeId>(total), edges);
  data.features = FeatureMatrix(total, d, std::move(x));
  data.labels = LabelSet::single(static_cast<std::uint32_t>(hops), std::move(labels));
  data.split = random_split(cores, spec.train_fraction, spec.val_fraction, rng);
  return data;
}

}  // namespace detail

inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0x5e7);
  if (spec.kind == SyntheticKind::kOrderProbe) return detail::gen_order_probe(spec, rng);
  return detail::gen_community_task(spec, rng);
}

/// Uniform random graph with about n * avg_degree / 2 undirected edges
/// (duplicates and loops are dropped, so the realized count is slightly lower).
inline Graph gen_random_graph(std::size_t n, double avg_degree, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("random graph needs at least 2 nodes");
  Rng rng = make_rng(seed, 0x6a7);
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n) * avg_degree / 2.0));
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(target);
  while (edges.size() < target) {
    const auto u = static_cast<NodeId>(uniform_index(rng, n));
    const auto v = static_cast<NodeId>(uniform_index(rng, n));
    if (u != v) edges.emplace_back(u, v);
  }
  return Graph::from_edges(static_cast<NodeId>(n), edges);
}

}  // namespace n2s
