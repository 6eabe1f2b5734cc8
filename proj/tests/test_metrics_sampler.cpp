// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <vector>

#include "n2s/metrics.hpp"
#include "n2s/sampler.hpp"

namespace n2s {
namespace {

std::vector<NodeId> iota_nodes(std::size_t n) {
  std::vector<NodeId> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(Metrics, AccuracyExamples) {
  const std::vector<std::uint32_t> t{0, 2, 1};
  EXPECT_EQ(accuracy(t, t), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<std::uint32_t>{0, 1, 1}, t), 2.0 / 3.0);
  EXPECT_THROW(accuracy(std::vector<std::uint32_t>{0}, t), ShapeError);
}

TEST(Metrics, MicroF1HandCount) {
  // 4 nodes x 1 class: TP at nodes 0, 1; FP at node 2; FN at node 3.
  const std::vector<std::uint8_t> pred{1, 1, 1, 0};
  const std::vector<std::uint8_t> target{1, 1, 0, 1};
  const ConfusionCounts c = count_confusion(pred, target);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_DOUBLE_EQ(f1_micro(pred, target), 2.0 / 3.0);
}

TEST(Metrics, MicroF1WithNoPositivesIsOne) {
  const std::vector<std::uint8_t> zeros(12, 0);
  EXPECT_EQ(f1_micro(zeros, zeros), 1.0);
  EXPECT_EQ(f1_micro(std::vector<std::uint8_t>{1, 0}, std::vector<std::uint8_t>{0, 1}), 0.0);
}

TEST(Metrics, MicroF1PoolsAcrossNodes) {
  ConfusionCounts total;
  total += count_confusion(std::vector<std::uint8_t>{1, 0}, std::vector<std::uint8_t>{1, 1});
  total += count_confusion(std::vector<std::uint8_t>{1, 1}, std::vector<std::uint8_t>{0, 1});
  EXPECT_DOUBLE_EQ(f1_micro(total), 2.0 / (2.0 + 1.0));
}

TEST(Sampler, TenNodesBatchThree) {
  const auto nodes = iota_nodes(10);
  MinibatchSampler sampler(nodes, 3, make_rng(1, 2));
  EXPECT_EQ(sampler.batches_per_epoch(), 4u);
  const auto batches = sampler.next_epoch();
  ASSERT_EQ(batches.size(), 4u);
  EXPECT_EQ(batches[0].size(), 3u);
  EXPECT_EQ(batches[1].size(), 3u);
  EXPECT_EQ(batches[2].size(), 3u);
  EXPECT_EQ(batches[3].size(), 1u);
  std::vector<NodeId> seen;
  for (const auto& b : batches) seen.insert(seen.end(), b.begin(), b.end());
  std::ranges::sort(seen);
  EXPECT_EQ(seen, nodes);
}

TEST(Sampler, SameSeedSameStreamDifferentEpochsDiffer) {
  const auto nodes = iota_nodes(50);
  MinibatchSampler a(nodes, 8, make_rng(4, 2)), b(nodes, 8, make_rng(4, 2));
  const auto a1 = a.next_epoch(), a2 = a.next_epoch();
  EXPECT_EQ(a1, b.next_epoch());
  EXPECT_EQ(a2, b.next_epoch());
  EXPECT_NE(a1, a2);
}

TEST(Sampler, EveryPairEventuallySharesABatch) {
  const auto nodes = iota_nodes(20);
  MinibatchSampler sampler(nodes, 10, make_rng(9, 2));
  std::set<std::pair<NodeId, NodeId>> together;
  for (int epoch = 0; epoch < 1000; ++epoch)
    for (const auto& batch : sampler.next_epoch())
      for (NodeId u : batch)
        for (NodeId v : batch)
          if (u < v) together.emplace(u, v);
  EXPECT_EQ(together.size(), 20u * 19u / 2u);
}

TEST(Sampler, PositionsAreUniform) {
  // Each node should land in the first batch about batch/n of the time.
  const auto nodes = iota_nodes(8);
  MinibatchSampler sampler(nodes, 2, make_rng(10, 2));
  std::vector<int> first(8, 0);
  for (int epoch = 0; epoch < 40000; ++epoch) {
    const auto batches = sampler.next_epoch();
    for (NodeId v : batches[0]) ++first[v];
  }
  for (int count : first) EXPECT_NEAR(count, 10000, 400);
}

TEST(Sampler, RejectsDegenerateInput) {
  EXPECT_THROW(MinibatchSampler({}, 4, make_rng(0, 2)), InvalidArgument);
  const auto nodes = iota_nodes(3);
  EXPECT_THROW(MinibatchSampler(nodes, 0, make_rng(0, 2)), InvalidArgument);
}

}  // namespace
}  // namespace n2s
