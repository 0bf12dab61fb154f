// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/rewire.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include <Eigen/Eigenvalues>

#include "grass/error.hpp"

namespace grass {

namespace {

void check_degree(int r) {
  if (r < 0 || r % 2 != 0) {
    fail(ErrorKind::validation, "random regular degree r must be even and >= 0, got " +
                                    std::to_string(r));
  }
}

}  // namespace

Pseudograph pseudograph_from_permutations(std::size_t num_nodes,
                                          std::span<const Permutation> sigmas) {
  Pseudograph pg;
  pg.num_nodes = num_nodes;
  pg.edges.reserve(num_nodes * sigmas.size());
  for (const Permutation& s : sigmas) {
    require(s.size() == num_nodes, "permutation length does not match node count");
  }
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const auto node = static_cast<Index>(i);
    for (const Permutation& s : sigmas) pg.edges.push_back({node, s(node)});
  }
  return pg;
}

Pseudograph sample_permutation_pseudograph(std::size_t num_nodes, int r, Rng& rng) {
  check_degree(r);
  require(r >= 2, "the permutation model needs r >= 2");
  require(num_nodes >= 1, "the permutation model needs at least one node");
  std::vector<Permutation> sigmas;
  sigmas.reserve(static_cast<std::size_t>(r / 2));
  for (int j = 0; j < r / 2; ++j) sigmas.push_back(Permutation::random(num_nodes, rng));
  return pseudograph_from_permutations(num_nodes, sigmas);
}

bool is_simple(const Pseudograph& pg) {
  std::vector<NodePair> c;
  c.reserve(pg.edges.size());
  for (const NodePair& p : pg.edges) {
    if (p.a == p.b) return false;
    c.push_back(p.canonical());
  }
  std::sort(c.begin(), c.end());
  return std::adjacent_find(c.begin(), c.end()) == c.end();
}

std::vector<NodePair> simplify(std::span<const NodePair> pairs) {
  std::vector<NodePair> out;
  out.reserve(pairs.size());
  for (const NodePair& p : pairs) {
    if (p.a != p.b) out.push_back(p.canonical());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RewiredGraph::RewiredGraph(GraphPtr base, std::vector<Edge> added)
    : base_(std::move(base)), added_(std::move(added)) {
  require(base_ != nullptr, "rewired graph needs a base graph");
}

RewiredGraph superimpose(GraphPtr g, std::span<const NodePair> simple_edges) {
  require(g != nullptr, "superimpose needs a graph");
  const std::size_t n = g->num_nodes();
  std::vector<Edge> added;
  added.reserve(simple_edges.size() * 2);
  for (const NodePair& p : simple_edges) {
    if (p.a >= n || p.b >= n) {
      fail(ErrorKind::validation, "added pair {" + std::to_string(p.a) + "," +
                                      std::to_string(p.b) + "} out of range for " +
                                      std::to_string(n) + " nodes");
    }
    added.push_back({p.a, p.b});
    added.push_back({p.b, p.a});
  }
  return RewiredGraph(std::move(g), std::move(added));
}

RewiredGraph permute_nodes(const RewiredGraph& h, const Permutation& p) {
  auto base = std::make_shared<const Graph>(permute_nodes(h.base(), p));
  std::vector<Edge> added;
  added.reserve(h.num_added_edges());
  for (const Edge& e : h.added_edges()) added.push_back({p(e.head), p(e.tail)});
  return RewiredGraph(std::move(base), std::move(added));
}

void RewireConfig::validate() const {
  check_degree(r);
  require(max_retries >= 1, "max_retries must be >= 1");
}

RewiredGraph rewire(GraphPtr g, const RewireConfig& cfg, Rng& rng) {
  cfg.validate();
  require(g != nullptr, "rewire needs a graph");
  if (cfg.r == 0 || g->num_nodes() == 0) return RewiredGraph(std::move(g), {});
  Pseudograph pg = sample_permutation_pseudograph(g->num_nodes(), cfg.r, rng);
  if (cfg.retry_until_simple) {
    int attempts = 1;
    while (!is_simple(pg)) {
      if (attempts++ >= cfg.max_retries) {
        fail(ErrorKind::numeric, "no simple pseudograph after " +
                                     std::to_string(cfg.max_retries) + " attempts");
      }
      pg = sample_permutation_pseudograph(g->num_nodes(), cfg.r, rng);
    }
  }
  const auto simple = simplify(pg);
  return superimpose(std::move(g), simple);
}

std::vector<NodePair> undirected_pairs(const Graph& g) {
  std::vector<NodePair> pairs;
  pairs.reserve(g.num_edges());
  for (const Edge& e : g.edges()) pairs.push_back({e.head, e.tail});
  return simplify(pairs);
}

std::optional<std::size_t> diameter(std::span<const NodePair> edges, std::size_t num_nodes) {
  if (num_nodes <= 1) return 0;
  std::vector<std::vector<Index>> adj(num_nodes);
  for (const NodePair& p : edges) {
    require(p.a < num_nodes && p.b < num_nodes, "edge index out of range");
    if (p.a == p.b) continue;
    adj[p.a].push_back(p.b);
    adj[p.b].push_back(p.a);
  }
  std::size_t best = 0;
  std::vector<std::size_t> dist(num_nodes);
  std::vector<Index> queue(num_nodes);
  constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
  for (std::size_t s = 0; s < num_nodes; ++s) {
    std::fill(dist.begin(), dist.end(), kUnseen);
    std::size_t head = 0, tail = 0;
    dist[s] = 0;
    queue[tail++] = static_cast<Index>(s);
    while (head < tail) {
      const Index u = queue[head++];
      for (Index v : adj[u]) {
        if (dist[v] == kUnseen) {
          dist[v] = dist[u] + 1;
          queue[tail++] = v;
        }
      }
    }
    if (tail != num_nodes) return std::nullopt;
    best = std::max(best, dist[queue[tail - 1]]);
  }
  return best;
}

double spectral_gap(std::span<const NodePair> edges, std::size_t num_nodes) {
  const bool has_edge = std::any_of(edges.begin(), edges.end(),
                                    [](const NodePair& p) { return p.a != p.b; });
  if (num_nodes == 0 || !has_edge) fail(ErrorKind::validation, "spectral gap of an empty graph");
  const auto n = static_cast<Eigen::Index>(num_nodes);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const NodePair& p : edges) {
    require(p.a < num_nodes && p.b < num_nodes, "edge index out of range");
    if (p.a == p.b) continue;
    lap(p.a, p.a) += 1.0;
    lap(p.b, p.b) += 1.0;
    lap(p.a, p.b) -= 1.0;
    lap(p.b, p.a) -= 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numeric, "Laplacian eigensolve failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double tol = 1e-9 * std::max(1.0, ev(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ev(i) > tol) return ev(i);
  }
  fail(ErrorKind::numeric, "Laplacian has no positive eigenvalue");
}

double simplicity_rate(std::size_t num_nodes, int r, std::size_t trials, Rng& rng) {
  require(trials >= 1, "simplicity_rate needs at least one trial");
  std::size_t simple = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (is_simple(sample_permutation_pseudograph(num_nodes, r, rng))) ++simple;
  }
  return static_cast<double>(simple) / static_cast<double>(trials);
}

std::size_t diameter_upper_bound(std::size_t num_nodes, int r, double c) {
  require(r >= 3, "diameter bound needs r >= 3");
  require(num_nodes >= 2, "diameter bound needs at least two nodes");
  const double n = static_cast<double>(num_nodes);
  const double rhs = c * r * n * std::log(n);
  std::size_t d = 1;
  double lhs = 1.0;  // (r-1)^(d-1)
  while (lhs < rhs) {
    lhs *= (r - 1);
    ++d;
  }
  return d;
}

double spectral_gap_lower_bound(int r) { return r - 2.0 * std::sqrt(r - 1.0) - 1.0; }

}  // namespace grass
