// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "grass/graph.hpp"
#include "grass/rng.hpp"

namespace grass {

/// Unordered pair {a, b}. Stored as sampled; `canonical()` orders it.
struct NodePair {
  Index a = 0;
  Index b = 0;

  NodePair canonical() const { return a <= b ? *this : NodePair{b, a}; }
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

/// Random regular multigraph with self-loops, as produced by the
/// permutation model before simplification.
struct Pseudograph {
  std::size_t num_nodes = 0;
  std::vector<NodePair> edges;
};

/// Draws r/2 uniform permutations and emits {i, sigma_j(i)} for every node i
/// and permutation j, node-major. Requires r even, r >= 2, n >= 1.
Pseudograph sample_permutation_pseudograph(std::size_t num_nodes, int r, Rng& rng);

/// Deterministic core of the sampler with the permutations supplied.
Pseudograph pseudograph_from_permutations(std::size_t num_nodes,
                                          std::span<const Permutation> sigmas);

bool is_simple(const Pseudograph& pg);

/// Drops self-loops and repeated pairs. Output is canonical and sorted.
std::vector<NodePair> simplify(std::span<const NodePair> pairs);
inline std::vector<NodePair> simplify(const Pseudograph& pg) { return simplify(pg.edges); }

enum class EdgeOrigin : std::uint8_t { original = 0, added = 1 };

/// Input graph with a superimposed random simple graph. Directed edges are
/// indexed base-first: [0, base.num_edges()) are original, the rest added,
/// each added pair contributing (a,b) then (b,a).
class RewiredGraph {
 public:
  RewiredGraph() = default;
  RewiredGraph(GraphPtr base, std::vector<Edge> added);

  const Graph& base() const noexcept { return *base_; }
  const GraphPtr& base_ptr() const noexcept { return base_; }
  std::span<const Edge> added_edges() const noexcept { return added_; }

  std::size_t num_nodes() const noexcept { return base_->num_nodes(); }
  std::size_t num_edges() const noexcept { return base_->num_edges() + added_.size(); }
  std::size_t num_original_edges() const noexcept { return base_->num_edges(); }
  std::size_t num_added_edges() const noexcept { return added_.size(); }

  Edge edge(std::size_t e) const {
    const std::size_t m = base_->num_edges();
    return e < m ? base_->edge(e) : added_[e - m];
  }
  EdgeOrigin origin(std::size_t e) const {
    return e < base_->num_edges() ? EdgeOrigin::original : EdgeOrigin::added;
  }

 private:
  GraphPtr base_;
  std::vector<Edge> added_;
};

RewiredGraph superimpose(GraphPtr g, std::span<const NodePair> simple_edges);

/// Relabels base and added edges together; edge order is unchanged.
RewiredGraph permute_nodes(const RewiredGraph& h, const Permutation& p);

struct RewireConfig {
  int r = 0;
  std::uint64_t seed = 0;
  /// Resample until the pseudograph is simple instead of simplifying.
  bool retry_until_simple = false;
  int max_retries = 10000;

  void validate() const;
};

/// Fresh sample per call from `rng`; r == 0 returns the input unchanged.
RewiredGraph rewire(GraphPtr g, const RewireConfig& cfg, Rng& rng);

/// Undirected simple pair set underlying a graph's directed edge list.
std::vector<NodePair> undirected_pairs(const Graph& g);

/// Exact diameter via breadth-first search from every node. nullopt means
/// the graph is disconnected. A graph with zero or one node has diameter 0.
std::optional<std::size_t> diameter(std::span<const NodePair> edges, std::size_t num_nodes);

/// Smallest positive eigenvalue of the combinatorial Laplacian via a dense
/// symmetric eigensolve. Throws on an empty graph.
double spectral_gap(std::span<const NodePair> edges, std::size_t num_nodes);

/// Monte-Carlo fraction of sampled pseudographs that are simple.
double simplicity_rate(std::size_t num_nodes, int r, std::size_t trials, Rng& rng);

/// Smallest d with (r-1)^(d-1) >= c * r * n * ln n.
std::size_t diameter_upper_bound(std::size_t num_nodes, int r, double c = 3.0);

/// r - 2 sqrt(r-1) - 1
double spectral_gap_lower_bound(int r);

}  // namespace grass
