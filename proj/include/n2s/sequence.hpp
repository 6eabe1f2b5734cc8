// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// SequenceTensor and its on-disk form.
//
// Sequence file layout (little-endian):
//   "N2SQ" | version u32 = 1 | n u64 | L u32 | d u32 |
//   payload f64 [node][position 0..L][feature]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "n2s/binary_io.hpp"
#include "n2s/error.hpp"

namespace n2s {

inline constexpr std::string_view kSequenceMagic = "N2SQ";
inline constexpr std::uintmax_t kSequenceHeaderBytes = 24;

/// n x (L+1) x d hop-aggregated features; slot (i, l) holds node i's
/// l-hop walk-weighted feature sum.
class SequenceTensor {
 public:
  SequenceTensor() = default;
  SequenceTensor(std::size_t n, unsigned hops, std::size_t d)
      : n_(n), hops_(hops), d_(d), values_(n * (std::size_t{hops} + 1) * d, 0.0) {}
  SequenceTensor(std::size_t n, unsigned hops, std::size_t d, std::vector<double> values)
      : n_(n), hops_(hops), d_(d), values_(std::move(values)) {
    if (values_.size() != n_ * positions() * d_) throw ShapeError("sequence payload size mismatch");
  }

  std::size_t num_nodes() const { return n_; }
  unsigned hops() const { return hops_; }
  std::size_t positions() const { return std::size_t{hops_} + 1; }
  std::size_t dim() const { return d_; }
  std::size_t node_stride() const { return positions() * d_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> node(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * node_stride(), node_stride());
  }
  std::span<const double> slot(std::size_t i, std::size_t position) const {
    return std::span<const double>(values_).subspan(i * node_stride() + position * d_, d_);
  }
  std::span<double> slot(std::size_t i, std::size_t position) {
    return std::span<double>(values_).subspan(i * node_stride() + position * d_, d_);
  }

  friend bool operator==(const SequenceTensor&, const SequenceTensor&) = default;

 private:
  std::size_t n_ = 0;
  unsigned hops_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

struct SequenceHeader {
  std::uint64_t n = 0;
  std::uint32_t hops = 0;
  std::uint32_t dim = 0;

  std::uintmax_t payload_bytes() const { return n * (std::uintmax_t{hops} + 1) * dim * sizeof(double); }
};

inline void write_sequence_header(std::ostream& out, const SequenceHeader& h) {
  io::write_magic(out, kSequenceMagic);
  io::write_le(out, io::kFormatVersion);
  io::write_le(out, h.n);
  io::write_le(out, h.hops);
  io::write_le(out, h.dim);
}

/// Reads and validates the header, including the exact payload size.
inline SequenceHeader read_sequence_header(std::istream& in, const std::filesystem::path& path) {
  io::expect_magic(in, kSequenceMagic, path);
  io::expect_version(in, path);
  SequenceHeader h;
  h.n = io::read_le<std::uint64_t>(in, "n");
  h.hops = io::read_le<std::uint32_t>(in, "L");
  h.dim = io::read_le<std::uint32_t>(in, "d");
  io::expect_file_size(path, kSequenceHeaderBytes + h.payload_bytes());
  return h;
}

inline void save_sequence(const SequenceTensor& seq, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  write_sequence_header(out, {seq.num_nodes(), seq.hops(), static_cast<std::uint32_t>(seq.dim())});
  io::write_array(out, seq.values());
  io::finish_output(out, path);
}

inline SequenceTensor load_sequence(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  const auto h = read_sequence_header(in, path);
  SequenceTensor seq(h.n, h.hops, h.dim);
  io::read_array(in, seq.values(), path.string());
  return seq;
}

/// Random access to individual node rows of a sequence file without loading
/// the payload.
class SequenceFileReader {
 public:
  explicit SequenceFileReader(const std::filesystem::path& path) : path_(path), in_(io::open_input(path)) {
    header_ = read_sequence_header(in_, path_);
  }

  const SequenceHeader& header() const { return header_; }
  std::size_t node_stride() const { return (std::size_t{header_.hops} + 1) * header_.dim; }

  void read_node(std::uint64_t i, std::span<double> out) {
    if (i >= header_.n) throw InvalidArgument("node " + std::to_string(i) + " out of range in " + path_.string());
    if (out.size() != node_stride()) throw ShapeError("read_node: output span has wrong size");
    in_.seekg(static_cast<std::streamoff>(kSequenceHeaderBytes + i * node_stride() * sizeof(double)));
    io::read_array(in_, out, path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  SequenceHeader header_;
};

}  // namespace n2s
