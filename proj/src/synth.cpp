// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

#include "grass/rng.hpp"

namespace grass {

namespace {

// Rough element mix of drug-like molecules: carbon dominates, then N, O, halogens.
struct AtomKind {
  double weight;
  int valence;
};

std::array<AtomKind, kMoleculeAtomTypes> atom_kinds() {
  std::array<AtomKind, kMoleculeAtomTypes> a{};
  const AtomKind common[] = {{55.0, 4}, {12.0, 2}, {10.0, 3}, {3.0, 1}, {3.0, 4}, {2.0, 2},
                             {2.0, 3}, {1.5, 1}, {1.2, 4}, {1.0, 1}, {0.8, 3}, {0.6, 2}};
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = i < std::size(common) ? common[i] : AtomKind{0.15, 1 + static_cast<int>(i % 4)};
  }
  return a;
}

struct Contributions {
  std::array<double, kMoleculeAtomTypes> atom;
  std::array<double, kMoleculeAtomTypes> pair;
  std::array<double, kMoleculeBondTypes> bond;
};

// Raw target mean and scale factor measured over 20000 generated graphs.
constexpr double kTargetCenter = 18.25;
constexpr double kTargetScale = 0.4;

// Fixed tables so every generated dataset shares one target function.
const Contributions& contributions() {
  static const Contributions c = [] {
    Contributions t{};
    Rng rng(0x5eedc0de);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (auto& v : t.atom) v = 0.35 * nd(rng);
    for (auto& v : t.pair) v = 0.2 * nd(rng);
    for (auto& v : t.bond) v = 0.5 * nd(rng);
    return t;
  }();
  return c;
}

std::vector<int> bfs_distance(const std::vector<std::vector<Index>>& adj, Index src) {
  std::vector<int> d(adj.size(), -1);
  std::queue<Index> q;
  d[src] = 0;
  q.push(src);
  while (!q.empty()) {
    const Index u = q.front();
    q.pop();
    for (Index v : adj[u]) {
      if (d[v] < 0) {
        d[v] = d[u] + 1;
        q.push(v);
      }
    }
  }
  return d;
}

Sample molecule(Rng& rng) {
  static const auto kinds = atom_kinds();
  std::vector<double> w;
  for (const AtomKind& k : kinds) w.push_back(k.weight);
  std::discrete_distribution<std::size_t> pick_atom(w.begin(), w.end());
  std::normal_distribution<double> size_nd(23.2, 4.6);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const auto n = static_cast<std::size_t>(std::clamp(std::lround(size_nd(rng)), 9L, 38L));
  std::vector<std::size_t> type(n);
  std::vector<int> free(n);
  std::vector<std::vector<Index>> adj(n);
  std::vector<Edge> edges;
  std::vector<int> bond;

  // tree growth: attach each new atom to an existing atom with spare valence
  type[0] = 0;
  free[0] = kinds[0].valence;
  for (std::size_t i = 1; i < n; ++i) {
    std::vector<Index> open;
    for (std::size_t j = 0; j < i; ++j) if (free[j] > 0) open.push_back(static_cast<Index>(j));
    const std::size_t t = open.empty() ? 0 : pick_atom(rng);
    // keep the tree growable: monovalent atoms only while other slots remain
    type[i] = (kinds[t].valence == 1 && open.size() < 2) ? 0 : t;
    free[i] = kinds[type[i]].valence;
    const Index parent = open.empty() ? static_cast<Index>(i - 1)
                                      : open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    edges.push_back({parent, static_cast<Index>(i)});
    bond.push_back(0);
    adj[parent].push_back(static_cast<Index>(i));
    adj[i].push_back(parent);
    --free[parent];
    --free[i];
  }

  // ring closures between atoms four or five bonds apart
  const int rings = std::poisson_distribution<int>(2.7)(rng);
  int closed = 0;
  for (int attempt = 0; attempt < 60 && closed < rings; ++attempt) {
    const auto a = static_cast<Index>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    if (free[a] <= 0) continue;
    const std::vector<int> d = bfs_distance(adj, a);
    std::vector<Index> cand;
    for (std::size_t b = 0; b < n; ++b) {
      if (free[b] > 0 && (d[b] == 4 || d[b] == 5)) cand.push_back(static_cast<Index>(b));
    }
    if (cand.empty()) continue;
    const Index b = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
    edges.push_back({a, b});
    bond.push_back(3);
    adj[a].push_back(b);
    adj[b].push_back(a);
    --free[a];
    --free[b];
    ++closed;
  }

  // promote some tree bonds to double or triple where valence allows
  for (std::size_t e = 0; e < n - 1; ++e) {
    const Index h = edges[e].head, t = edges[e].tail;
    if (free[h] > 0 && free[t] > 0 && u01(rng) < 0.35) {
      const bool triple = free[h] > 1 && free[t] > 1 && u01(rng) < 0.15;
      bond[e] = triple ? 2 : 1;
      free[h] -= triple ? 2 : 1;
      free[t] -= triple ? 2 : 1;
    }
  }

  const Contributions& c = contributions();
  double y = -0.55 * closed;
  for (std::size_t i = 0; i < n; ++i) {
    y += c.atom[type[i]];
    if (adj[i].size() >= 3) y += 0.15;
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::size_t th = type[edges[e].head], tt = type[edges[e].tail];
    y += c.bond[bond[e]] * (1.0 + c.pair[th] + c.pair[tt]);
  }

  Mat nf(static_cast<Eigen::Index>(n), 1), ef(static_cast<Eigen::Index>(edges.size()), 1);
  for (std::size_t i = 0; i < n; ++i) nf(static_cast<Eigen::Index>(i), 0) = static_cast<double>(type[i]);
  for (std::size_t e = 0; e < edges.size(); ++e) ef(static_cast<Eigen::Index>(e), 0) = bond[e];
  Sample s;
  s.graph = std::make_shared<const Graph>(build_graph(n, edges, std::move(nf), std::move(ef), false));
  // Affine map onto the ZINC target range (mean near 0, s.d. near 2).
  s.target = {(y - kTargetCenter) * kTargetScale};
  return s;
}

}  // namespace

Dataset synthetic_molecules(std::size_t count, std::uint64_t seed) {
  Dataset ds;
  ds.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, {0x6d6f6cULL, i});
    ds.samples.push_back(molecule(rng));
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(&seed, sizeof seed, h);
  h = fnv1a(&count, sizeof count, h);
  ds.content_hash = h;
  return ds;
}

}  // namespace grass
