// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "n2s/graph.hpp"
#include "n2s/random.hpp"
#include "n2s/tensor.hpp"

namespace n2s::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("n2s_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

/// Erdos-Renyi style graph with roughly `avg_degree` neighbors per node.
inline Graph random_graph(NodeId n, double avg_degree, Rng& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  const double p = n > 1 ? std::min(1.0, avg_degree / static_cast<double>(n - 1)) : 0.0;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (bernoulli(rng, p)) edges.emplace_back(i, j);
  return Graph::from_edges(n, edges);
}

inline FeatureMatrix random_features(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<double> v(n * d);
  for (double& x : v) x = normal(rng);
  return FeatureMatrix(n, d, std::move(v));
}

inline Graph path_graph(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph::from_edges(n, edges);
}

inline void fill_normal(Tensor& t, Rng& rng, double scale = 1.0) {
  for (double& v : t.values()) v = normal(rng, 0.0, scale);
}

}  // namespace n2s::testing
