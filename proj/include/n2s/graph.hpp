// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "n2s/error.hpp"

namespace n2s {

using NodeId = std::uint32_t;
using EdgeOffset = std::uint64_t;

/// Immutable undirected graph in compressed-sparse-row form.
///
/// Every edge (i, j) is stored in both row i and row j. Rows are sorted and
/// duplicate-free. Self-loops only appear after add_self_loops(), and then
/// exactly once per row.
class Graph {
 public:
  Graph() : row_offsets_{0} {}

  /// Takes ownership of CSR arrays and validates every structural invariant.
  static Graph from_csr(std::vector<EdgeOffset> row_offsets, std::vector<NodeId> col_indices,
                        bool has_self_loops) {
    Graph g;
    g.row_offsets_ = std::move(row_offsets);
    g.col_indices_ = std::move(col_indices);
    g.has_self_loops_ = has_self_loops;
    g.validate();
    return g;
  }

  /// Builds a symmetrized, deduplicated graph from an arbitrary edge list.
  /// Input self-loops (i, i) are dropped; use add_self_loops() for the diagonal.
  static Graph from_edges(NodeId n, std::span<const std::pair<NodeId, NodeId>> edges) {
    std::vector<std::pair<NodeId, NodeId>> arcs;
    arcs.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
      if (u >= n || v >= n)
        throw InvalidArgument("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") has node id out of range for n = " + std::to_string(n));
      if (u == v) continue;
      arcs.emplace_back(u, v);
      arcs.emplace_back(v, u);
    }
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

    std::vector<EdgeOffset> offsets(static_cast<std::size_t>(n) + 1, 0);
    std::vector<NodeId> cols;
    cols.reserve(arcs.size());
    for (auto [u, v] : arcs) {
      ++offsets[u + 1];
      cols.push_back(v);
    }
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
    Graph g;
    g.row_offsets_ = std::move(offsets);
    g.col_indices_ = std::move(cols);
    return g;
  }

  NodeId num_nodes() const { return static_cast<NodeId>(row_offsets_.size() - 1); }
  EdgeOffset num_edges() const { return row_offsets_.back(); }
  bool has_self_loops() const { return has_self_loops_; }

  std::span<const EdgeOffset> row_offsets() const { return row_offsets_; }
  std::span<const NodeId> col_indices() const { return col_indices_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return std::span<const NodeId>(col_indices_).subspan(row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]);
  }
  EdgeOffset degree(NodeId i) const { return row_offsets_[i + 1] - row_offsets_[i]; }

  bool has_edge(NodeId i, NodeId j) const {
    const auto row = neighbors(i);
    return std::binary_search(row.begin(), row.end(), j);
  }

  /// Full transpose comparison: true iff the stored matrix equals its transpose.
  bool is_symmetric() const {
    const NodeId n = num_nodes();
    std::vector<EdgeOffset> cursor(row_offsets_.begin(), row_offsets_.end() - 1);
    // Walking rows in order, the entries of column j appear in ascending row
    // order, which must match row j's sorted neighbor list entry by entry.
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j : neighbors(i)) {
        if (cursor[j] >= row_offsets_[j + 1] || col_indices_[cursor[j]] != i) return false;
        ++cursor[j];
      }
    }
    for (NodeId j = 0; j < n; ++j)
      if (cursor[j] != row_offsets_[j + 1]) return false;
    return true;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void validate() const {
    if (row_offsets_.empty() || row_offsets_.front() != 0)
      throw FormatError("row_offsets must start at 0");
    if (row_offsets_.back() != col_indices_.size())
      throw FormatError("row_offsets[n] must equal the number of column indices");
    const NodeId n = num_nodes();
    for (NodeId i = 0; i < n; ++i) {
      if (row_offsets_[i + 1] < row_offsets_[i]) throw FormatError("row_offsets must be non-decreasing");
      const auto row = neighbors(i);
      bool saw_diagonal = false;
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] >= n) throw FormatError("column index out of range in row " + std::to_string(i));
        if (k > 0 && row[k] <= row[k - 1])
          throw FormatError("row " + std::to_string(i) + " is not strictly increasing");
        saw_diagonal |= row[k] == i;
      }
      if (saw_diagonal != has_self_loops_)
        throw FormatError("row " + std::to_string(i) + (has_self_loops_ ? " lacks" : " has") + " a self-loop");
    }
    if (!is_symmetric()) throw FormatError("adjacency is not symmetric");
  }

  std::vector<EdgeOffset> row_offsets_;
  std::vector<NodeId> col_indices_;
  bool has_self_loops_ = false;
};

/// Returns A + I: one self-loop per row, inserted in sorted position.
inline Graph add_self_loops(const Graph& g) {
  if (g.has_self_loops()) throw InvalidArgument("graph already has self-loops");
  const NodeId n = g.num_nodes();
  std::vector<EdgeOffset> offsets(static_cast<std::size_t>(n) + 1);
  std::vector<NodeId> cols;
  cols.reserve(g.num_edges() + n);
  for (NodeId i = 0; i < n; ++i) {
    offsets[i] = cols.size();
    const auto row = g.neighbors(i);
    const auto split = std::lower_bound(row.begin(), row.end(), i);
    cols.insert(cols.end(), row.begin(), split);
    cols.push_back(i);
    cols.insert(cols.end(), split, row.end());
  }
  offsets[n] = cols.size();
  return Graph::from_csr(std::move(offsets), std::move(cols), true);
}

/// Keeps only edges with both endpoints in `keep`; node ids are unchanged and
/// excluded nodes become isolated (self-loop only, if the input had them).
inline Graph induced_subgraph(const Graph& g, std::span<const NodeId> keep) {
  const NodeId n = g.num_nodes();
  std::vector<char> in_set(n, 0);
  for (NodeId v : keep) {
    if (v >= n) throw InvalidArgument("induced_subgraph: node id out of range");
    in_set[v] = 1;
  }
  std::vector<EdgeOffset> offsets(static_cast<std::size_t>(n) + 1, 0);
  std::vector<NodeId> cols;
  for (NodeId i = 0; i < n; ++i) {
    offsets[i] = cols.size();
    for (NodeId j : g.neighbors(i))
      if ((in_set[i] && in_set[j]) || (i == j)) cols.push_back(j);
  }
  offsets[n] = cols.size();
  return Graph::from_csr(std::move(offsets), std::move(cols), g.has_self_loops());
}

/// Parses a text edge list: one "src dst" pair per line, whitespace- or
/// comma-separated, '#' starts a comment line. Returns the symmetrized graph
/// without self-loops.
inline Graph load_edge_list(const std::filesystem::path& path, NodeId n) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    auto skip_separators = [&] {
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t' || rest.front() == ',' ||
                               rest.front() == '\r'))
        rest.remove_prefix(1);
    };
    skip_separators();
    if (rest.empty() || rest.front() == '#') continue;
    NodeId ids[2];
    for (NodeId& id : ids) {
      skip_separators();
      std::uint64_t value = 0;
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
      if (ec != std::errc{}) fail("expected two integer node ids");
      if (value >= n) fail("node id " + std::to_string(value) + " out of range for n = " + std::to_string(n));
      id = static_cast<NodeId>(value);
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
    }
    skip_separators();
    if (!rest.empty()) fail("unexpected trailing characters");
    edges.emplace_back(ids[0], ids[1]);
  }
  if (edges.empty()) throw FormatError(path.string() + ": empty edge set");
  return Graph::from_edges(n, edges);
}

/// Writes each undirected non-loop edge once as "i j" with i < j.
inline void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# n=" << g.num_nodes() << "\n";
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    for (NodeId j : g.neighbors(i))
      if (i < j) out << i << ' ' << j << '\n';
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

/// Dense n x d node features, row-major, all finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_)
      throw ShapeError("feature matrix payload has " + std::to_string(values_.size()) + " values, expected " +
                       std::to_string(rows_ * cols_));
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (!std::isfinite(values_[k]))
        throw NumericError("non-finite feature value at row " + std::to_string(k / std::max<std::size_t>(1, cols_)));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * cols_, cols_);
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class TaskKind { kSingleLabel, kMultiLabel };

/// Per-node targets. Single-label keeps one class id per node; multi-label
/// keeps an n x num_classes 0/1 matrix.
class LabelSet {
 public:
  LabelSet() = default;

  static LabelSet single(std::uint32_t num_classes, std::vector<std::uint32_t> class_ids) {
    if (num_classes == 0) throw InvalidArgument("num_classes must be positive");
    for (std::size_t i = 0; i < class_ids.size(); ++i)
      if (class_ids[i] >= num_classes)
        throw FormatError("label out of range at node " + std::to_string(i) + ": " +
                          std::to_string(class_ids[i]) + " >= " + std::to_string(num_classes));
    LabelSet s;
    s.kind_ = TaskKind::kSingleLabel;
    s.num_classes_ = num_classes;
    s.num_nodes_ = class_ids.size();
    s.class_ids_ = std::move(class_ids);
    return s;
  }

  static LabelSet multi(std::uint32_t num_classes, std::size_t num_nodes, std::vector<std::uint8_t> bits) {
    if (num_classes == 0) throw InvalidArgument("num_classes must be positive");
    if (bits.size() != num_nodes * num_classes) throw ShapeError("multi-label matrix has wrong size");
    for (std::size_t k = 0; k < bits.size(); ++k)
      if (bits[k] > 1) throw FormatError("multi-label entry at node " + std::to_string(k / num_classes) + " is not 0/1");
    LabelSet s;
    s.kind_ = TaskKind::kMultiLabel;
    s.num_classes_ = num_classes;
    s.num_nodes_ = num_nodes;
    s.bits_ = std::move(bits);
    return s;
  }

  TaskKind kind() const { return kind_; }
  std::uint32_t num_classes() const { return num_classes_; }
  std::size_t num_nodes() const { return num_nodes_; }
  std::uint32_t class_of(std::size_t node) const { return class_ids_.at(node); }
  std::span<const std::uint32_t> class_ids() const { return class_ids_; }
  std::span<const std::uint8_t> targets_of(std::size_t node) const {
    return std::span<const std::uint8_t>(bits_).subspan(node * num_classes_, num_classes_);
  }
  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  TaskKind kind_ = TaskKind::kSingleLabel;
  std::uint32_t num_classes_ = 0;
  std::size_t num_nodes_ = 0;
  std::vector<std::uint32_t> class_ids_;
  std::vector<std::uint8_t> bits_;
};

/// Disjoint train/validation/test node index sets.
struct NodeSplit {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  std::span<const NodeId> part(std::string_view name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw InvalidArgument("unknown split part \"" + std::string(name) + "\" (expected train, val or test)");
  }

  void validate(std::size_t n) const {
    if (train.empty()) throw FormatError("train split is empty");
    std::vector<std::uint8_t> owner(n, 0);
    std::uint8_t tag = 1;
    for (const auto* set : {&train, &val, &test}) {
      for (NodeId v : *set) {
        if (v >= n) throw FormatError("split index " + std::to_string(v) + " out of range");
        if (owner[v] == tag) throw FormatError("duplicate index " + std::to_string(v) + " within a split");
        if (owner[v] != 0) throw FormatError("overlapping splits at node " + std::to_string(v));
        owner[v] = tag;
      }
      ++tag;
    }
  }

  friend bool operator==(const NodeSplit&, const NodeSplit&) = default;
};

}  // namespace n2s
