// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "grad_cases.hpp"

namespace n2s::testing {
namespace {

constexpr std::uint64_t kSeeds = 20;

class OpGradient : public ::testing::TestWithParam<GradCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) EXPECT_LT(GetParam().run(seed), 1e-6) << "seed " << seed;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(op_grad_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(OpGradient, LinearIsNearExact) {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) EXPECT_LT(grad_linear(seed), 1e-8);
}

TEST(ModelGradient, ConvHead) {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) EXPECT_LT(grad_model(HeadKind::kConv, false, seed), 1e-4);
}

TEST(ModelGradient, AttnHeadWithPositionalCodes) {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) EXPECT_LT(grad_model(HeadKind::kAttn, true, seed), 1e-4);
}

TEST(ModelGradient, AttnHeadWithoutPositionalCodes) {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) EXPECT_LT(grad_model(HeadKind::kAttn, false, seed), 1e-4);
}

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_EQ(relative_error(0.5, 0.25), 0.25);
  EXPECT_EQ(relative_error(10.0, 8.0), 0.2);
  std::vector<double> x{1.0, 2.0};
  const std::vector<double> wrong{2.0, 0.0};
  const auto res = grad_check([&] { return x[0] * x[0] + 3 * x[1]; }, x, wrong);
  EXPECT_EQ(res.worst_index, 1u);
  EXPECT_NEAR(res.max_relative_error, 1.0, 1e-9);
  EXPECT_EQ(x, (std::vector<double>{1.0, 2.0}));
}

}  // namespace
}  // namespace n2s::testing
