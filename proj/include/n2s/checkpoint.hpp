// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Checkpoint layout (little-endian):
//   "N2SC" | version u32 = 1 |
//   config length u32 | config JSON (UTF-8, may be empty) |
//   parameter count u32 |
//   per parameter: name length u32 | name | rank u32 | dims u32 x rank | f64 payload

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "n2s/binary_io.hpp"
#include "n2s/tensor.hpp"

namespace n2s {

inline constexpr std::string_view kCheckpointMagic = "N2SC";

struct Checkpoint {
  std::string config_json;
  std::vector<Parameter> params;
};

inline void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter> params,
                            const std::string& config_json = {}) {
  auto out = io::open_output(path);
  io::write_magic(out, kCheckpointMagic);
  io::write_le(out, io::kFormatVersion);
  io::write_le(out, static_cast<std::uint32_t>(config_json.size()));
  out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  io::write_le(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    io::write_le(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    io::write_le(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t dim : p.tensor.shape()) io::write_le(out, static_cast<std::uint32_t>(dim));
    io::write_array(out, p.tensor.values());
  }
  io::finish_output(out, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  const std::uintmax_t file_bytes = std::filesystem::file_size(path);
  io::expect_magic(in, kCheckpointMagic, path);
  io::expect_version(in, path);
  auto read_string = [&](const char* what) {
    const auto len = io::read_le<std::uint32_t>(in, what);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (in.gcount() != static_cast<std::streamsize>(len)) throw FormatError(std::string("truncated ") + what);
    return s;
  };
  Checkpoint ckpt;
  ckpt.config_json = read_string("config block");
  const auto count = io::read_le<std::uint32_t>(in, "parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string("parameter name");
    const auto rank = io::read_le<std::uint32_t>(in, "rank");
    if (rank > 8) throw FormatError("implausible rank " + std::to_string(rank) + " for parameter " + name);
    Shape shape(rank);
    for (auto& dim : shape) dim = io::read_le<std::uint32_t>(in, "dimension");
    const auto remaining = file_bytes - static_cast<std::uintmax_t>(in.tellg());
    if (shape_size(shape) > remaining / sizeof(double))
      throw FormatError("truncated payload for parameter " + name + ": expected " +
                        std::to_string(shape_size(shape) * sizeof(double)) + " bytes, got " + std::to_string(remaining));
    Tensor t(shape);
    io::read_array(in, t.values(), "parameter " + name);
    ckpt.params.emplace_back(std::move(name), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint " + path.string());
  return ckpt;
}

}  // namespace n2s
