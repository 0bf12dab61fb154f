// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/encode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grass/error.hpp"

namespace grass {

double SparseRows::at(Index i, Index j) const {
  const auto b = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto e = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(b, e, j);
  return (it != e && *it == j) ? values[static_cast<std::size_t>(it - cols.begin())] : 0.0;
}

Mat SparseRows::dense() const {
  const auto n = static_cast<Eigen::Index>(num_rows);
  Mat m = Mat::Zero(n, n);
  for (std::size_t i = 0; i < num_rows; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) m(i, cols[p]) = values[p];
  }
  return m;
}

SparseRows transition_matrix(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<Index>> out(n);
  for (const Edge& e : g.edges()) out[e.head].push_back(e.tail);

  SparseRows t;
  t.num_rows = n;
  t.row_ptr.assign(1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& nb = out[i];
    std::sort(nb.begin(), nb.end());
    const double deg = static_cast<double>(nb.size());
    for (std::size_t p = 0; p < nb.size();) {
      std::size_t q = p;
      while (q < nb.size() && nb[q] == nb[p]) ++q;
      t.cols.push_back(nb[p]);
      t.values.push_back(static_cast<double>(q - p) / deg);
      p = q;
    }
    t.row_ptr.push_back(t.cols.size());
  }
  return t;
}

RrwpTensor::RrwpTensor(std::size_t num_nodes, std::size_t k, std::vector<std::size_t> row_ptr,
                       std::vector<Index> cols, std::vector<double> values)
    : num_nodes_(num_nodes),
      k_(k),
      row_ptr_(std::move(row_ptr)),
      cols_(std::move(cols)),
      values_(std::move(values)) {
  require(row_ptr_.size() == num_nodes_ + 1, "RRWP row pointer size mismatch");
  require(row_ptr_.back() == cols_.size(), "RRWP column count mismatch");
  require(values_.size() == cols_.size() * k_, "RRWP value count mismatch");
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    require(row_ptr_[i] <= row_ptr_[i + 1], "RRWP row pointers not monotone");
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      require(cols_[p] < num_nodes_, "RRWP column out of range");
      require(p == row_ptr_[i] || cols_[p - 1] < cols_[p], "RRWP columns not sorted");
    }
  }
}

double RrwpTensor::at(std::size_t h, Index i, Index j) const {
  require(h >= 1 && h <= k_, "walk step out of range");
  const auto b = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto e = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return 0.0;
  const auto pos = static_cast<std::size_t>(it - cols_.begin());
  return values_[pos * k_ + (h - 1)];
}

void RrwpTensor::pair(Index i, Index j, std::span<double> out) const {
  const auto b = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto e = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const auto pos = static_cast<std::size_t>(it - cols_.begin());
  std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(pos * k_), k_, out.begin());
}

RrwpTensor rrwp(const Graph& g, std::size_t k) {
  if (k < 1) fail(ErrorKind::validation, "RRWP walk length k must be >= 1");
  const std::size_t n = g.num_nodes();
  const SparseRows t = transition_matrix(g);

  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> cols;
  std::vector<double> values;

  std::vector<double> cur(n, 0.0), next(n, 0.0);
  std::vector<Index> cur_support, next_support;
  std::vector<char> in_next(n, 0);
  std::vector<char> touched(n, 0);
  std::vector<Index> pattern;
  // per-node step values for the current source, n x k
  std::vector<double> acc(n * k, 0.0);

  for (std::size_t src = 0; src < n; ++src) {
    cur_support.assign(1, static_cast<Index>(src));
    cur[src] = 1.0;
    pattern.clear();
    for (std::size_t h = 0; h < k; ++h) {
      next_support.clear();
      for (Index u : cur_support) {
        const double pu = cur[u];
        for (std::size_t p = t.row_ptr[u]; p < t.row_ptr[u + 1]; ++p) {
          const Index v = t.cols[p];
          if (!in_next[v]) {
            in_next[v] = 1;
            next_support.push_back(v);
          }
          next[v] += pu * t.values[p];
        }
      }
      for (Index u : cur_support) cur[u] = 0.0;
      for (Index v : next_support) {
        in_next[v] = 0;
        acc[static_cast<std::size_t>(v) * k + h] = next[v];
        if (!touched[v]) {
          touched[v] = 1;
          pattern.push_back(v);
        }
      }
      std::swap(cur, next);
      std::swap(cur_support, next_support);
    }
    for (Index u : cur_support) cur[u] = 0.0;

    std::sort(pattern.begin(), pattern.end());
    for (Index v : pattern) {
      cols.push_back(v);
      const auto base = static_cast<std::ptrdiff_t>(static_cast<std::size_t>(v) * k);
      values.insert(values.end(), acc.begin() + base, acc.begin() + base + static_cast<std::ptrdiff_t>(k));
      std::fill(acc.begin() + base, acc.begin() + base + static_cast<std::ptrdiff_t>(k), 0.0);
      touched[v] = 0;
    }
    row_ptr.push_back(cols.size());
  }
  return RrwpTensor(n, k, std::move(row_ptr), std::move(cols), std::move(values));
}

DegreeTable degree_table(const Graph& g) {
  DegreeTable d;
  d.out_degree.assign(g.num_nodes(), 0);
  d.in_degree.assign(g.num_nodes(), 0);
  for (const Edge& e : g.edges()) {
    ++d.out_degree[e.head];
    ++d.in_degree[e.tail];
  }
  for (Index v : d.out_degree) d.max_out = std::max(d.max_out, v);
  for (Index v : d.in_degree) d.max_in = std::max(d.max_in, v);
  return d;
}

RawEncodings lookup_encodings(const RrwpTensor& p, const RewiredGraph& h) {
  if (p.num_nodes() != h.num_nodes()) {
    fail(ErrorKind::validation, "RRWP tensor has " + std::to_string(p.num_nodes()) +
                                    " nodes but the graph has " + std::to_string(h.num_nodes()));
  }
  const std::size_t k = p.k();
  RawEncodings out;
  out.node.resize(static_cast<Eigen::Index>(h.num_nodes()), static_cast<Eigen::Index>(k));
  out.edge.resize(static_cast<Eigen::Index>(h.num_edges()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < h.num_nodes(); ++i) {
    const auto v = static_cast<Index>(i);
    p.pair(v, v, {out.node.row(i).data(), k});
  }
  for (std::size_t e = 0; e < h.num_edges(); ++e) {
    const Edge ed = h.edge(e);
    p.pair(ed.head, ed.tail, {out.edge.row(e).data(), k});
  }
  return out;
}

// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(Eigen::Index channels)
    : gamma(1, channels, false),
      beta(1, channels, false),
      running_mean(Mat::Zero(1, channels)),
      running_var(Mat::Ones(1, channels)) {
  gamma.value.setOnes();
}

Mat BatchNorm::forward(const Mat& x, Mode mode, Cache& cache) {
  const auto rows = x.rows();
  Mat mean, var;
  cache.batch_stats = mode == Mode::train && rows > 0;
  if (cache.batch_stats) {
    mean = x.colwise().mean();
    var = (x.rowwise() - mean.row(0)).array().square().colwise().mean();
    const double unbias = rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
    running_mean = (1.0 - kMomentum) * running_mean + kMomentum * mean;
    running_var = (1.0 - kMomentum) * running_var + kMomentum * unbias * var;
  } else {
    mean = running_mean;
    var = running_var;
  }
  cache.inv_std = (var.array() + kEps).rsqrt().matrix();
  cache.xhat = ((x.rowwise() - mean.row(0)).array().rowwise() * cache.inv_std.row(0).array()).matrix();
  Mat y = (cache.xhat.array().rowwise() * gamma.value.row(0).array()).matrix();
  y.rowwise() += beta.value.row(0);
  return y;
}

Mat BatchNorm::backward(const Cache& cache, const Mat& dy) {
  const auto rows = dy.rows();
  gamma.grad += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  beta.grad += dy.colwise().sum();
  if (rows == 0) return dy;
  const Mat dxhat = (dy.array().rowwise() * gamma.value.row(0).array()).matrix();
  if (!cache.batch_stats) {
    return (dxhat.array().rowwise() * cache.inv_std.row(0).array()).matrix();
  }
  // Batch statistics: dx = inv_std/N * (N dxhat - sum dxhat - xhat sum(dxhat xhat)).
  const Mat sum_d = dxhat.colwise().sum();
  const Mat sum_dx = (dxhat.array() * cache.xhat.array()).colwise().sum().matrix();
  const double n = static_cast<double>(rows);
  Mat dx = dxhat;
  dx.rowwise() -= sum_d.row(0) / n;
  dx -= (cache.xhat.array().rowwise() * (sum_dx.row(0).array() / n)).matrix();
  dx = (dx.array().rowwise() * cache.inv_std.row(0).array()).matrix();
  return dx;
}

DegreeMode choose_degree_mode(Index max_out, Index max_in) {
  return static_cast<std::uint64_t>(max_out) * max_in <= 4096 ? DegreeMode::table
                                                               : DegreeMode::linear;
}

Encoder::Encoder(const EncoderConfig& cfg) : cfg_(cfg) {
  require(cfg.k >= 1, "encoder needs k >= 1");
  require(cfg.dim >= 1, "encoder needs dim >= 1");
  const auto k = static_cast<Eigen::Index>(cfg.k);
  const auto n = static_cast<Eigen::Index>(cfg.dim);
  if (cfg.rrwp_enabled) {
    node_enc = Linear(k, n);
    edge_enc = Linear(k, n);
    bn_node = BatchNorm(k);
    bn_edge = BatchNorm(k);
  }
  if (cfg.degree_mode == DegreeMode::table) {
    const auto rows = static_cast<Eigen::Index>((cfg.max_out_degree + 1) * (cfg.max_in_degree + 1));
    degree_table = Param(rows, n, false);
  } else {
    degree_linear = Linear(2, n);
    bn_degree = BatchNorm(2);
  }
}

void Encoder::init(std::mt19937_64& rng) {
  if (cfg_.rrwp_enabled) {
    node_enc.init(rng);
    edge_enc.init(rng);
  }
  if (cfg_.degree_mode == DegreeMode::table) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Eigen::Index i = 0; i < degree_table.value.size(); ++i) degree_table.value.data()[i] = nd(rng);
  } else {
    degree_linear.init(rng);
  }
}

Index Encoder::degree_row(Index out, Index in) const {
  out = std::min(out, cfg_.max_out_degree);
  in = std::min(in, cfg_.max_in_degree);
  return out * (cfg_.max_in_degree + 1) + in;
}

void Encoder::forward(const Mat& x_in, const Mat& e_in, const Inputs& in, Mode mode, Mat& x0,
                      Mat& e0, Cache& cache) {
  const auto n = static_cast<Eigen::Index>(cfg_.dim);
  const std::size_t num_nodes = static_cast<std::size_t>(x_in.rows());
  if (x_in.cols() != n || e_in.cols() != n) {
    fail(ErrorKind::validation, "encoder input width does not match hidden dim");
  }
  if (in.out_degree.size() != num_nodes || in.in_degree.size() != num_nodes) {
    fail(ErrorKind::validation, "degree table does not match node count");
  }
  x0 = x_in;
  e0 = e_in;
  if (cfg_.rrwp_enabled) {
    require(in.node_raw && in.edge_raw, "encoder needs raw RRWP inputs");
    if (in.node_raw->rows() != x_in.rows() || in.edge_raw->rows() != e_in.rows() ||
        in.node_raw->cols() != static_cast<Eigen::Index>(cfg_.k) ||
        in.edge_raw->cols() != static_cast<Eigen::Index>(cfg_.k)) {
      fail(ErrorKind::validation, "raw RRWP encodings have the wrong shape");
    }
    cache.node_norm = bn_node.forward(*in.node_raw, mode, cache.bn_node);
    cache.edge_norm = bn_edge.forward(*in.edge_raw, mode, cache.bn_edge);
    x0 += node_enc.forward(cache.node_norm);
    e0 += edge_enc.forward(cache.edge_norm);
  }
  if (cfg_.degree_mode == DegreeMode::table) {
    cache.deg_rows.resize(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) {
      cache.deg_rows[i] = degree_row(in.out_degree[i], in.in_degree[i]);
      x0.row(i) += degree_table.value.row(cache.deg_rows[i]);
    }
  } else {
    Mat d(static_cast<Eigen::Index>(num_nodes), 2);
    for (std::size_t i = 0; i < num_nodes; ++i) {
      d(i, 0) = in.out_degree[i];
      d(i, 1) = in.in_degree[i];
    }
    cache.deg_norm = bn_degree.forward(d, mode, cache.bn_deg);
    x0 += degree_linear.forward(cache.deg_norm);
  }
}

void Encoder::backward(const Cache& cache, const Mat& dx0, const Mat& de0) {
  if (cfg_.rrwp_enabled) {
    bn_node.backward(cache.bn_node, node_enc.backward(cache.node_norm, dx0));
    bn_edge.backward(cache.bn_edge, edge_enc.backward(cache.edge_norm, de0));
  }
  if (cfg_.degree_mode == DegreeMode::table) {
    scatter_add_rows(degree_table.grad, cache.deg_rows, dx0);
  } else {
    bn_degree.backward(cache.bn_deg, degree_linear.backward(cache.deg_norm, dx0));
  }
}

}  // namespace grass
