// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "grass/error.hpp"

namespace grass {

namespace detail {

struct GraphBuilder {
  static Graph make(std::size_t n, std::vector<Edge> edges, Mat nf, Mat ef, bool directed) {
    Graph g;
    g.num_nodes_ = n;
    g.edges_ = std::move(edges);
    g.node_features_ = std::move(nf);
    g.edge_features_ = std::move(ef);
    g.directed_ = directed;
    return g;
  }
};

}  // namespace detail

bool operator==(const Graph& a, const Graph& b) {
  return a.num_nodes_ == b.num_nodes_ && a.directed_ == b.directed_ && a.edges_ == b.edges_ &&
         a.node_features_.rows() == b.node_features_.rows() &&
         a.node_features_.cols() == b.node_features_.cols() &&
         a.edge_features_.rows() == b.edge_features_.rows() &&
         a.edge_features_.cols() == b.edge_features_.cols() &&
         a.node_features_ == b.node_features_ && a.edge_features_ == b.edge_features_;
}

Graph build_graph(std::size_t num_nodes, std::span<const Edge> edges, Mat node_features,
                  Mat edge_features, bool directed) {
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& ed = edges[e];
    if (ed.head >= num_nodes || ed.tail >= num_nodes) {
      fail(ErrorKind::validation, "edge " + std::to_string(e) + " (" + std::to_string(ed.head) +
                                      "," + std::to_string(ed.tail) + ") out of range for " +
                                      std::to_string(num_nodes) + " nodes");
    }
  }
  if (node_features.size() == 0) node_features.resize(static_cast<Eigen::Index>(num_nodes), 0);
  if (edge_features.size() == 0) edge_features.resize(static_cast<Eigen::Index>(edges.size()), 0);
  if (static_cast<std::size_t>(node_features.rows()) != num_nodes) {
    fail(ErrorKind::validation, "node feature rows " + std::to_string(node_features.rows()) +
                                    " != num_nodes " + std::to_string(num_nodes));
  }
  if (static_cast<std::size_t>(edge_features.rows()) != edges.size()) {
    fail(ErrorKind::validation, "edge feature rows " + std::to_string(edge_features.rows()) +
                                    " != edge count " + std::to_string(edges.size()));
  }
  if (!node_features.allFinite() || !edge_features.allFinite()) {
    fail(ErrorKind::validation, "non-finite feature value");
  }

  if (directed) {
    return detail::GraphBuilder::make(num_nodes, {edges.begin(), edges.end()},
                                      std::move(node_features), std::move(edge_features), true);
  }
  std::vector<Edge> sym;
  sym.reserve(edges.size() * 2);
  Mat ef(static_cast<Eigen::Index>(edges.size() * 2), edge_features.cols());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    sym.push_back(edges[e]);
    sym.push_back({edges[e].tail, edges[e].head});
    ef.row(2 * e) = edge_features.row(e);
    ef.row(2 * e + 1) = edge_features.row(e);
  }
  return detail::GraphBuilder::make(num_nodes, std::move(sym), std::move(node_features),
                                    std::move(ef), false);
}

Permutation::Permutation(std::vector<Index> mapping) : mapping_(std::move(mapping)) {
  std::vector<char> seen(mapping_.size(), 0);
  for (Index v : mapping_) {
    if (v >= mapping_.size() || seen[v]) {
      fail(ErrorKind::validation, "permutation is not a bijection on [0, " +
                                      std::to_string(mapping_.size()) + ")");
    }
    seen[v] = 1;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<Index> m(n);
  std::iota(m.begin(), m.end(), Index{0});
  return Permutation(std::move(m));
}

Permutation Permutation::random(std::size_t n, std::mt19937_64& rng) {
  std::vector<Index> m(n);
  std::iota(m.begin(), m.end(), Index{0});
  std::shuffle(m.begin(), m.end(), rng);
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<Index> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = static_cast<Index>(i);
  return Permutation(std::move(inv));
}

Mat permute_rows(const Mat& rows, const Permutation& p) {
  require(static_cast<std::size_t>(rows.rows()) == p.size(),
          "permutation length does not match row count");
  Mat out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < p.size(); ++i) out.row(p(static_cast<Index>(i))) = rows.row(i);
  return out;
}

Graph permute_nodes(const Graph& g, const Permutation& p) {
  if (p.size() != g.num_nodes()) {
    fail(ErrorKind::validation, "permutation length " + std::to_string(p.size()) +
                                    " != num_nodes " + std::to_string(g.num_nodes()));
  }
  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (const Edge& e : g.edges()) edges.push_back({p(e.head), p(e.tail)});
  return detail::GraphBuilder::make(g.num_nodes(), std::move(edges),
                                    permute_rows(g.node_features(), p), g.edge_features(),
                                    g.directed());
}

BatchedGraph batch_graphs(std::span<const Graph> graphs) {
  require(!graphs.empty(), "cannot batch an empty list of graphs");
  const auto nd = graphs.front().node_features().cols();
  const auto ed = graphs.front().edge_features().cols();
  std::size_t total_nodes = 0, total_edges = 0;
  bool directed = false;
  for (const Graph& g : graphs) {
    if (g.node_features().cols() != nd || g.edge_features().cols() != ed) {
      fail(ErrorKind::validation, "batch members disagree on feature dimensionality");
    }
    total_nodes += g.num_nodes();
    total_edges += g.num_edges();
    directed = directed || g.directed();
  }

  BatchedGraph b;
  std::vector<Edge> edges;
  edges.reserve(total_edges);
  Mat nf(static_cast<Eigen::Index>(total_nodes), nd);
  Mat ef(static_cast<Eigen::Index>(total_edges), ed);
  b.node_graph.reserve(total_nodes);
  b.edge_graph.reserve(total_edges);
  std::size_t node_off = 0, edge_off = 0;
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    const Graph& g = graphs[m];
    b.member_offsets.push_back(node_off);
    b.member_edge_offsets.push_back(edge_off);
    const auto off = static_cast<Index>(node_off);
    for (const Edge& e : g.edges()) edges.push_back({e.head + off, e.tail + off});
    if (g.num_nodes() > 0) nf.middleRows(node_off, g.num_nodes()) = g.node_features();
    if (g.num_edges() > 0) ef.middleRows(edge_off, g.num_edges()) = g.edge_features();
    b.node_graph.insert(b.node_graph.end(), g.num_nodes(), static_cast<Index>(m));
    b.edge_graph.insert(b.edge_graph.end(), g.num_edges(), static_cast<Index>(m));
    node_off += g.num_nodes();
    edge_off += g.num_edges();
  }
  b.underlying = detail::GraphBuilder::make(total_nodes, std::move(edges), std::move(nf),
                                            std::move(ef), directed);
  return b;
}

}  // namespace grass
