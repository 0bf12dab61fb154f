// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grass/graph.hpp"
#include "grass/rewire.hpp"
#include "grass/tensor.hpp"

namespace grass {

/// Compressed sparse rows; column indices sorted within each row.
struct SparseRows {
  std::size_t num_rows = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> cols;
  std::vector<double> values;

  double at(Index i, Index j) const;
  Mat dense() const;
};

/// T[i][j] = A[i][j] / outdeg(i), A counting parallel edges. Sink rows stay
/// empty.
SparseRows transition_matrix(const Graph& g);

/// Stacked walk probabilities P_h = T^h for h = 1..k, stored as one CSR
/// pattern (union of supports over all steps) with k values per entry.
class RrwpTensor {
 public:
  RrwpTensor() = default;
  RrwpTensor(std::size_t num_nodes, std::size_t k, std::vector<std::size_t> row_ptr,
             std::vector<Index> cols, std::vector<double> values);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t nnz() const noexcept { return cols_.size(); }

  /// P_h[i][j] with h in [1, k]; zero when (i, j) is outside the pattern.
  double at(std::size_t h, Index i, Index j) const;
  /// Writes [P_1[i][j], ..., P_k[i][j]] into out (size k).
  void pair(Index i, Index j, std::span<double> out) const;

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const Index> cols() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const RrwpTensor&, const RrwpTensor&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t k_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> cols_;
  std::vector<double> values_;
};

/// Propagates each source's indicator row vector through T k times.
RrwpTensor rrwp(const Graph& g, std::size_t k);

struct DegreeTable {
  std::vector<Index> out_degree;
  std::vector<Index> in_degree;
  Index max_out = 0;
  Index max_in = 0;

  friend bool operator==(const DegreeTable&, const DegreeTable&) = default;
};

DegreeTable degree_table(const Graph& g);

struct RawEncodings {
  Mat node;  // |V| x k, diagonal walk probabilities
  Mat edge;  // |E_H| x k, P_{:,head,tail} per directed edge of H
};

/// `p` must have been computed on h's base graph.
RawEncodings lookup_encodings(const RrwpTensor& p, const RewiredGraph& h);

/// Per-channel batch normalization with running statistics.
class BatchNorm {
 public:
  struct Cache {
    Mat xhat;
    Mat inv_std;  // 1 x c
    bool batch_stats = false;
  };

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm() = default;
  explicit BatchNorm(Eigen::Index channels);

  Mat forward(const Mat& x, Mode mode, Cache& cache);
  Mat backward(const Cache& cache, const Mat& dy);

  Param gamma;
  Param beta;
  Mat running_mean;
  Mat running_var;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gamma", gamma);
    f(prefix + ".beta", beta);
  }
  template <class F>
  void visit_buffers(const std::string& prefix, F&& f) {
    f(prefix + ".running_mean", running_mean);
    f(prefix + ".running_var", running_var);
  }
};

enum class DegreeMode { table, linear };

/// Embedding table when max_out * max_in <= 4096, linear otherwise.
DegreeMode choose_degree_mode(Index max_out, Index max_in);

struct EncoderConfig {
  std::size_t k = 1;
  std::size_t dim = 1;
  bool rrwp_enabled = true;
  DegreeMode degree_mode = DegreeMode::table;
  Index max_out_degree = 0;
  Index max_in_degree = 0;
};

/// Structural encoders: batch-normalized walk probabilities projected to the
/// hidden width, plus a degree encoding for nodes.
class Encoder {
 public:
  struct Inputs {
    const Mat* node_raw = nullptr;  // |V| x k
    const Mat* edge_raw = nullptr;  // |E| x k
    std::span<const Index> out_degree;
    std::span<const Index> in_degree;
  };
  struct Cache {
    BatchNorm::Cache bn_node, bn_edge, bn_deg;
    Mat node_norm, edge_norm, deg_norm;
    std::vector<Index> deg_rows;
  };

  Encoder() = default;
  explicit Encoder(const EncoderConfig& cfg);

  const EncoderConfig& config() const noexcept { return cfg_; }

  /// x0 = x_in + W_node BN(raw_node) + deg;  e0 = e_in + W_edge BN(raw_edge)
  void forward(const Mat& x_in, const Mat& e_in, const Inputs& in, Mode mode, Mat& x0, Mat& e0,
               Cache& cache);
  /// Gradients w.r.t. x_in and e_in equal dx0 and de0; only parameters are
  /// updated here.
  void backward(const Cache& cache, const Mat& dx0, const Mat& de0);

  void init(std::mt19937_64& rng);

  Linear node_enc;
  Linear edge_enc;
  BatchNorm bn_node;
  BatchNorm bn_edge;
  Param degree_table;  // (max_out+1)*(max_in+1) x n
  Linear degree_linear;
  BatchNorm bn_degree;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    if (cfg_.rrwp_enabled) {
      node_enc.visit(prefix + ".node_enc", f);
      edge_enc.visit(prefix + ".edge_enc", f);
      bn_node.visit(prefix + ".bn_node", f);
      bn_edge.visit(prefix + ".bn_edge", f);
    }
    if (cfg_.degree_mode == DegreeMode::table) {
      f(prefix + ".degree_table", degree_table);
    } else {
      degree_linear.visit(prefix + ".degree_linear", f);
      bn_degree.visit(prefix + ".bn_degree", f);
    }
  }
  template <class F>
  void visit_buffers(const std::string& prefix, F&& f) {
    if (cfg_.rrwp_enabled) {
      bn_node.visit_buffers(prefix + ".bn_node", f);
      bn_edge.visit_buffers(prefix + ".bn_edge", f);
    }
    if (cfg_.degree_mode == DegreeMode::linear) bn_degree.visit_buffers(prefix + ".bn_degree", f);
  }

 private:
  Index degree_row(Index out, Index in) const;

  EncoderConfig cfg_;
};

}  // namespace grass
