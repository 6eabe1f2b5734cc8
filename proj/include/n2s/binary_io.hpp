// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "n2s/error.hpp"

// Little-endian primitives shared by every binary file format in the project.
namespace n2s::io {

inline constexpr std::uint32_t kFormatVersion = 1;

template <class T>
T to_little_endian(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
  }
  return value;
}

template <class T>
void write_le(std::ostream& out, T value) {
  value = to_little_endian(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_le(std::istream& in, std::string_view what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw FormatError("truncated file while reading " + std::string(what));
  return to_little_endian(value);
}

template <class T>
void write_array(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (const T& v : values) write_le(out, v);
  }
}

template <class T>
void read_array(std::istream& in, std::span<T> values, std::string_view what) {
  const auto want = static_cast<std::streamsize>(values.size_bytes());
  in.read(reinterpret_cast<char*>(values.data()), want);
  if (in.gcount() != want)
    throw FormatError("truncated payload in " + std::string(what) + ": expected " +
                      std::to_string(want) + " bytes, got " + std::to_string(in.gcount()));
  if constexpr (std::endian::native == std::endian::big) {
    for (T& v : values) v = to_little_endian(v);
  }
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic, const std::filesystem::path& path) {
  std::array<char, 4> got{};
  in.read(got.data(), got.size());
  if (in.gcount() != 4 || std::string_view(got.data(), 4) != magic)
    throw FormatError("magic mismatch in " + path.string() + ": expected \"" + std::string(magic) + "\"");
}

inline void expect_version(std::istream& in, const std::filesystem::path& path) {
  const auto version = read_le<std::uint32_t>(in, "format version");
  if (version != kFormatVersion)
    throw FormatError("unsupported format version " + std::to_string(version) + " in " + path.string());
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("write failed for " + path.string() + " (disk full?)");
}

/// Size check for fixed-layout payloads; reports expected and actual byte counts.
inline void expect_file_size(const std::filesystem::path& path, std::uintmax_t expected) {
  const auto actual = std::filesystem::file_size(path);
  if (actual < expected)
    throw FormatError("truncated file " + path.string() + ": expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual));
  if (actual > expected)
    throw FormatError("trailing bytes in " + path.string() + ": expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual));
}

}  // namespace n2s::io
