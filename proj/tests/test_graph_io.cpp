// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "n2s/graph_io.hpp"
#include "n2s/sequence.hpp"
#include "test_util.hpp"

namespace n2s {
namespace {

using testing::read_bytes;
using testing::TempDir;
using testing::write_text;

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(FeatureFile, RoundTripsAndHasDocumentedLayout) {
  TempDir dir("io");
  const FeatureMatrix x(3, 2, {1.5, -2, 0, 4, 1e-300, 7});
  save_features(x, dir / "x.bin");
  const std::string raw = read_bytes(dir / "x.bin");
  ASSERT_EQ(raw.size(), 16u + 6 * 8);
  EXPECT_EQ(raw.substr(0, 4), "N2SF");
  std::uint32_t header[3];
  std::memcpy(header, raw.data() + 4, 12);
  EXPECT_EQ(header[0], 1u);
  EXPECT_EQ(header[1], 3u);
  EXPECT_EQ(header[2], 2u);
  const FeatureMatrix back = load_features(dir / "x.bin");
  EXPECT_EQ(back.rows(), 3u);
  EXPECT_EQ(back.cols(), 2u);
  EXPECT_EQ(back, x);
}

TEST(FeatureFile, CorruptionIsDetected) {
  TempDir dir("io");
  save_features(FeatureMatrix(2, 2, {1, 2, 3, 4}), dir / "x.bin");
  std::string raw = read_bytes(dir / "x.bin");

  write_text(dir / "short.bin", raw.substr(0, raw.size() - 3));
  const std::string msg = error_of([&] { load_features(dir / "short.bin"); });
  EXPECT_NE(msg.find("expected 48 bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("45"), std::string::npos) << msg;

  write_text(dir / "long.bin", raw + "x");
  EXPECT_THROW(load_features(dir / "long.bin"), FormatError);

  std::string bad_magic = raw;
  bad_magic[0] = 'X';
  write_text(dir / "magic.bin", bad_magic);
  EXPECT_THROW(load_features(dir / "magic.bin"), FormatError);

  std::string bad_version = raw;
  bad_version[4] = 9;
  write_text(dir / "version.bin", bad_version);
  EXPECT_THROW(load_features(dir / "version.bin"), FormatError);

  std::string nan_payload = raw;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan_payload.data() + 16, &nan, 8);
  write_text(dir / "nan.bin", nan_payload);
  EXPECT_THROW(load_features(dir / "nan.bin"), NumericError);
}

TEST(LabelFile, SingleAndMultiLabelRoundTrip) {
  TempDir dir("io");
  const LabelSet single = LabelSet::single(4, {0, 3, 2, 2});
  save_labels(single, dir / "y.bin");
  EXPECT_EQ(load_labels(dir / "y.bin"), single);

  const LabelSet multi = LabelSet::multi(3, 2, {1, 0, 1, 0, 0, 0});
  save_labels(multi, dir / "m.bin");
  const LabelSet back = load_labels(dir / "m.bin");
  EXPECT_EQ(back.kind(), TaskKind::kMultiLabel);
  EXPECT_EQ(back, multi);
  EXPECT_EQ(read_bytes(dir / "m.bin").size(), 16u + 6);
}

TEST(LabelFile, ClassIdEqualToClassCountIsRejected) {
  TempDir dir("io");
  save_labels(LabelSet::single(3, {0, 2}), dir / "y.bin");
  std::string raw = read_bytes(dir / "y.bin");
  const std::uint32_t bad = 3;
  std::memcpy(raw.data() + 16 + 4, &bad, 4);
  write_text(dir / "bad.bin", raw);
  EXPECT_NE(error_of([&] { load_labels(dir / "bad.bin"); }).find("label out of range"), std::string::npos);
}

TEST(SplitFile, RoundTripsAndRejectsOverlap) {
  TempDir dir("io");
  const NodeSplit split{{0, 3}, {1}, {2, 4}};
  save_split(split, 5, dir / "s.bin");
  const auto [back, n] = load_split_with_size(dir / "s.bin");
  EXPECT_EQ(back, split);
  EXPECT_EQ(n, 5u);

  // Hand-write a file whose train and val parts share node 1.
  std::string raw = read_bytes(dir / "s.bin");
  const std::uint32_t shared = 1;
  std::memcpy(raw.data() + 16 + 4, &shared, 4);
  write_text(dir / "overlap.bin", raw);
  EXPECT_NE(error_of([&] { load_split(dir / "overlap.bin"); }).find("overlapping splits"), std::string::npos);

  EXPECT_THROW(save_split(NodeSplit{{0}, {0}, {}}, 2, dir / "x.bin"), FormatError);
}

TEST(SequenceFile, RoundTripIsBitwise) {
  TempDir dir("io");
  Rng rng = make_rng(5, 0);
  SequenceTensor seq(7, 3, 5);
  for (double& v : seq.values()) v = normal(rng) * 1e10;
  save_sequence(seq, dir / "s.n2sq");
  EXPECT_EQ(read_bytes(dir / "s.n2sq").size(), 24u + 7 * 4 * 5 * 8);
  const SequenceTensor back = load_sequence(dir / "s.n2sq");
  EXPECT_EQ(back, seq);
  EXPECT_EQ(std::memcmp(back.values().data(), seq.values().data(), seq.values().size_bytes()), 0);

  SequenceFileReader reader(dir / "s.n2sq");
  std::vector<double> row(reader.node_stride());
  reader.read_node(4, row);
  EXPECT_TRUE(std::ranges::equal(row, seq.node(4)));
  EXPECT_THROW(reader.read_node(7, row), InvalidArgument);
}

TEST(SequenceFile, CorruptMagicAndTruncationFail) {
  TempDir dir("io");
  SequenceTensor seq(2, 1, 2);
  save_sequence(seq, dir / "s.n2sq");
  std::string raw = read_bytes(dir / "s.n2sq");

  std::string magic = raw;
  magic[3] = 'Z';
  write_text(dir / "magic.n2sq", magic);
  EXPECT_THROW(load_sequence(dir / "magic.n2sq"), FormatError);

  write_text(dir / "cut.n2sq", raw.substr(0, raw.size() - 8));
  const std::string msg = error_of([&] { load_sequence(dir / "cut.n2sq"); });
  EXPECT_NE(msg.find("expected " + std::to_string(raw.size())), std::string::npos) << msg;
  EXPECT_NE(msg.find(std::to_string(raw.size() - 8)), std::string::npos) << msg;
}

}  // namespace
}  // namespace n2s
