// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Wall-clock measurements of precompute cost and per-epoch training cost on
// random graphs of chosen size and density.

#include <algorithm>
#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "n2s/precompute.hpp"
#include "n2s/synthetic.hpp"
#include "n2s/train.hpp"

namespace n2s {

struct BenchVariant {
  std::size_t n = 0;
  double avg_degree = 0.0;
};

/// Parses "n:degree[,n:degree...]".
inline std::vector<BenchVariant> parse_bench_variants(const std::string& text) {
  std::vector<BenchVariant> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) throw InvalidArgument("bench variant \"" + item + "\" must look like n:degree");
    try {
      out.push_back({std::stoul(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw InvalidArgument("bench variant \"" + item + "\" must look like n:degree");
    }
    pos = comma + 1;
  }
  return out;
}

struct BenchOptions {
  TrainConfig train;  // model, batch size, learning rate, seed; paths unused
  unsigned warmup_epochs = 2;
  unsigned timed_epochs = 5;
  unsigned precompute_repeats = 5;
};

struct BenchResult {
  BenchVariant variant;
  std::size_t n = 0;
  std::uint64_t m = 0;  // stored entries of A + I
  double precompute_seconds = 0.0;  // median
  double epoch_seconds = 0.0;       // median
  std::vector<double> precompute_samples;
  std::vector<double> epoch_samples;

  nlohmann::json to_json() const {
    return {{"n", n},
            {"avg_degree", variant.avg_degree},
            {"m", m},
            {"precompute_seconds", precompute_seconds},
            {"epoch_seconds", epoch_seconds},
            {"precompute_samples", precompute_samples},
            {"epoch_samples", epoch_samples}};
  }
};

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::ranges::sort(values);
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace detail {

struct BenchCase {
  Graph graph;
  FeatureMatrix features;
  LabelSet labels;
  std::vector<NodeId> nodes;
  std::optional<SequenceSource> source;
  std::optional<Trainer> trainer;
};

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// For each variant: build a random graph, time the sequence precompute
/// (median of repeats) and the training epoch over all nodes (median of the
/// timed epochs after warm-up). Samples are taken in rounds that visit every
/// variant once, so slow drift in machine speed affects all variants alike.
inline std::vector<BenchResult> benchmark_epoch_time(const BenchOptions& options,
                                                     std::span<const BenchVariant> variants) {
  const ModelConfig& mc = options.train.model;
  std::vector<BenchResult> results(variants.size());
  std::vector<std::unique_ptr<detail::BenchCase>> cases;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const BenchVariant& v = variants[vi];
    auto bc = std::make_unique<detail::BenchCase>();
    bc->graph = add_self_loops(gen_random_graph(v.n, v.avg_degree, options.train.seed + vi));
    results[vi].variant = v;
    results[vi].n = bc->graph.num_nodes();
    results[vi].m = bc->graph.num_edges();

    Rng rng = make_rng(options.train.seed, 100 + vi);
    std::vector<double> x(v.n * mc.d);
    for (double& value : x) value = normal(rng);
    bc->features = FeatureMatrix(v.n, mc.d, std::move(x));
    std::vector<std::uint32_t> classes(v.n);
    for (auto& c : classes) c = static_cast<std::uint32_t>(uniform_index(rng, mc.num_classes));
    bc->labels = LabelSet::single(mc.num_classes, std::move(classes));
    bc->nodes.resize(v.n);
    for (std::size_t i = 0; i < v.n; ++i) bc->nodes[i] = static_cast<NodeId>(i);
    cases.push_back(std::move(bc));
  }

  PrecomputeOptions quiet;
  quiet.warn = nullptr;
  std::vector<SequenceTensor> sequences(variants.size());
  for (unsigned r = 0; r < std::max(1u, options.precompute_repeats); ++r)
    for (std::size_t vi = 0; vi < cases.size(); ++vi) {
      sequences[vi] = SequenceTensor();
      const auto start = std::chrono::steady_clock::now();
      sequences[vi] = neighbor2seq(cases[vi]->graph, cases[vi]->features, mc.L, quiet);
      if (r < options.precompute_repeats) results[vi].precompute_samples.push_back(detail::seconds_since(start));
    }

  for (std::size_t vi = 0; vi < cases.size(); ++vi) {
    detail::BenchCase& bc = *cases[vi];
    bc.source.emplace(std::move(sequences[vi]));
    bc.trainer.emplace(options.train, *bc.source, bc.labels, bc.nodes);
  }
  for (unsigned e = 0; e < options.warmup_epochs; ++e)
    for (auto& bc : cases) bc->trainer->train_epoch();
  for (unsigned e = 0; e < options.timed_epochs; ++e)
    for (std::size_t vi = 0; vi < cases.size(); ++vi)
      results[vi].epoch_samples.push_back(cases[vi]->trainer->train_epoch().seconds);

  for (auto& res : results) {
    res.precompute_seconds = median(res.precompute_samples);
    res.epoch_seconds = median(res.epoch_samples);
  }
  return results;
}

}  // namespace n2s
