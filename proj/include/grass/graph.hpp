// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "grass/tensor.hpp"

namespace grass {

struct Edge {
  Index head = 0;
  Index tail = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

namespace detail {
struct GraphBuilder;
}

/// Immutable directed multigraph with dense node and edge feature arrays.
/// Undirected graphs are stored as pairs of opposite directed edges.
class Graph {
 public:
  Graph() = default;

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }
  const Mat& node_features() const noexcept { return node_features_; }
  const Mat& edge_features() const noexcept { return edge_features_; }
  bool directed() const noexcept { return directed_; }

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  friend struct detail::GraphBuilder;

  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  Mat node_features_;
  Mat edge_features_;
  bool directed_ = true;
};

using GraphPtr = std::shared_ptr<const Graph>;

/// Validates and builds a graph. For undirected input each listed edge (and
/// its feature row) is emitted as (h,t) followed by (t,h). Feature matrices
/// with zero columns are allowed; a 0x0 matrix is read as "no features".
Graph build_graph(std::size_t num_nodes, std::span<const Edge> edges, Mat node_features,
                  Mat edge_features, bool directed);

/// A bijection on [0, n). Construction validates.
class Permutation {
 public:
  explicit Permutation(std::vector<Index> mapping);
  static Permutation identity(std::size_t n);
  static Permutation random(std::size_t n, std::mt19937_64& rng);

  std::size_t size() const noexcept { return mapping_.size(); }
  Index operator()(Index i) const { return mapping_[i]; }
  std::span<const Index> mapping() const noexcept { return mapping_; }
  Permutation inverse() const;

 private:
  std::vector<Index> mapping_;
};

/// Node i becomes p(i). Edge order is preserved; feature rows of nodes move
/// with their node.
Graph permute_nodes(const Graph& g, const Permutation& p);

/// Row i of the result is row p^{-1}(i) of `rows`, i.e. row i moves to p(i).
Mat permute_rows(const Mat& rows, const Permutation& p);

/// Disjoint union of graphs with recorded member offsets.
struct BatchedGraph {
  std::vector<std::size_t> member_offsets;
  std::vector<std::size_t> member_edge_offsets;
  Graph underlying;
  std::vector<Index> node_graph;
  std::vector<Index> edge_graph;

  std::size_t num_members() const noexcept { return member_offsets.size(); }
};

BatchedGraph batch_graphs(std::span<const Graph> graphs);

}  // namespace grass
