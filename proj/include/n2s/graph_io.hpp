// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary node-data files. Each starts with a 16-byte header:
//   magic[4] | version u32 | dim0 u32 | dim1 u32
// followed by a little-endian payload.
//   N2SF features:  dims (n, d), row-major f64.
//   N2SL labels:    dims (n, C). Single-label: u32 class id per node.
//                   Multi-label: C carries kMultiLabelFlag; payload is an
//                   n x C matrix of u8 0/1 values.
//   N2SS splits:    dims (n, 3); then train, val, test, each as u32 length
//                   followed by that many u32 node ids.

#include <cstdint>
#include <filesystem>
#include <limits>

#include "n2s/binary_io.hpp"
#include "n2s/graph.hpp"

namespace n2s {

inline constexpr std::string_view kFeatureMagic = "N2SF";
inline constexpr std::string_view kLabelMagic = "N2SL";
inline constexpr std::string_view kSplitMagic = "N2SS";
inline constexpr std::uint32_t kMultiLabelFlag = 0x80000000u;
inline constexpr std::uintmax_t kNodeFileHeaderBytes = 16;

namespace detail {
inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument(std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}
}  // namespace detail

inline void save_features(const FeatureMatrix& x, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  io::write_magic(out, kFeatureMagic);
  io::write_le(out, io::kFormatVersion);
  io::write_le(out, detail::checked_u32(x.rows(), "n"));
  io::write_le(out, detail::checked_u32(x.cols(), "d"));
  io::write_array(out, x.values());
  io::finish_output(out, path);
}

inline FeatureMatrix load_features(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  io::expect_magic(in, kFeatureMagic, path);
  io::expect_version(in, path);
  const auto n = io::read_le<std::uint32_t>(in, "n");
  const auto d = io::read_le<std::uint32_t>(in, "d");
  io::expect_file_size(path, kNodeFileHeaderBytes + std::uintmax_t{n} * d * sizeof(double));
  std::vector<double> values(std::size_t{n} * d);
  io::read_array(in, std::span<double>(values), path.string());
  return FeatureMatrix(n, d, std::move(values));
}

inline void save_labels(const LabelSet& labels, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  io::write_magic(out, kLabelMagic);
  io::write_le(out, io::kFormatVersion);
  io::write_le(out, detail::checked_u32(labels.num_nodes(), "n"));
  if (labels.kind() == TaskKind::kSingleLabel) {
    io::write_le(out, labels.num_classes());
    io::write_array(out, labels.class_ids());
  } else {
    io::write_le(out, labels.num_classes() | kMultiLabelFlag);
    io::write_array(out, labels.bits());
  }
  io::finish_output(out, path);
}

inline LabelSet load_labels(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  io::expect_magic(in, kLabelMagic, path);
  io::expect_version(in, path);
  const auto n = io::read_le<std::uint32_t>(in, "n");
  const auto raw_classes = io::read_le<std::uint32_t>(in, "num_classes");
  const bool multi = (raw_classes & kMultiLabelFlag) != 0;
  const std::uint32_t classes = raw_classes & ~kMultiLabelFlag;
  if (multi) {
    io::expect_file_size(path, kNodeFileHeaderBytes + std::uintmax_t{n} * classes);
    std::vector<std::uint8_t> bits(std::size_t{n} * classes);
    io::read_array(in, std::span<std::uint8_t>(bits), path.string());
    return LabelSet::multi(classes, n, std::move(bits));
  }
  io::expect_file_size(path, kNodeFileHeaderBytes + std::uintmax_t{n} * sizeof(std::uint32_t));
  std::vector<std::uint32_t> ids(n);
  io::read_array(in, std::span<std::uint32_t>(ids), path.string());
  return LabelSet::single(classes, std::move(ids));
}

inline void save_split(const NodeSplit& split, std::size_t n, const std::filesystem::path& path) {
  split.validate(n);
  auto out = io::open_output(path);
  io::write_magic(out, kSplitMagic);
  io::write_le(out, io::kFormatVersion);
  io::write_le(out, detail::checked_u32(n, "n"));
  io::write_le(out, std::uint32_t{3});
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    io::write_le(out, detail::checked_u32(part->size(), "split length"));
    io::write_array(out, std::span<const NodeId>(*part));
  }
  io::finish_output(out, path);
}

/// Returns the split and the node count recorded in its header.
inline std::pair<NodeSplit, std::size_t> load_split_with_size(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  io::expect_magic(in, kSplitMagic, path);
  io::expect_version(in, path);
  const auto n = io::read_le<std::uint32_t>(in, "n");
  const auto parts = io::read_le<std::uint32_t>(in, "part count");
  if (parts != 3) throw FormatError("split file must hold 3 parts, found " + std::to_string(parts));
  NodeSplit split;
  std::uintmax_t expected = kNodeFileHeaderBytes;
  for (auto* part : {&split.train, &split.val, &split.test}) {
    const auto len = io::read_le<std::uint32_t>(in, "split length");
    if (len > n) throw FormatError("split part longer than node count in " + path.string());
    part->resize(len);
    io::read_array(in, std::span<NodeId>(*part), path.string());
    expected += 4 + std::uintmax_t{len} * 4;
  }
  io::expect_file_size(path, expected);
  split.validate(n);
  return {std::move(split), n};
}

inline NodeSplit load_split(const std::filesystem::path& path) { return load_split_with_size(path).first; }

}  // namespace n2s
