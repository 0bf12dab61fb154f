// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "grass/rng.hpp"
#include "grass/tensor.hpp"

namespace grass {

/// Edge orientation and in-neighbourhoods used by one attention layer.
/// Edges keep their index across layers; only head and tail swap.
struct AttentionTopology {
  std::size_t num_nodes = 0;
  std::vector<Index> head;
  std::vector<Index> tail;
  std::vector<std::size_t> in_ptr;  // CSR over tails, size num_nodes + 1
  std::vector<Index> in_edges;      // edge ids grouped by tail
  std::vector<double> in_degree;    // d^-(j) after rewiring, this orientation
  bool reversed = false;

  std::size_t num_edges() const noexcept { return head.size(); }
};

AttentionTopology make_topology(std::size_t num_nodes, std::span<const Index> heads,
                                std::span<const Index> tails, bool reversed);

/// The same edges with every direction swapped.
AttentionTopology flip(const AttentionTopology& topo);

/// Keep flags per edge and channel. An empty `keep` means all-keep.
struct DropKeyMask {
  Mat keep;
  double rate = 0.0;

  bool all_keep() const noexcept { return keep.size() == 0; }
};

DropKeyMask sample_dropkey(std::size_t num_edges, std::size_t dim, double rate, Mode mode,
                           Rng& rng);

/// Per channel c, M[c](i, j) = 1 iff some edge i->j keeps channel c. With
/// an all-keep mask every channel equals the adjacency of the topology.
std::vector<Mat> message_mask(const AttentionTopology& topo, const DropKeyMask& mask,
                              std::size_t dim);

enum class NormKind { pnv, layernorm };

NormKind parse_norm_kind(std::string_view s);
const char* to_string(NormKind k) noexcept;

/// Post-normalization. PN-V divides each channel by the batch quadratic
/// mean (running estimate in eval mode) and applies a gain; the layer-norm
/// variant is kept for ablations.
class Norm {
 public:
  struct Cache {
    Mat normalized;  // u / sigma  (pnv) or (u - mu) / sigma  (layernorm)
    Mat inv_scale;   // pnv: 1 x n; layernorm: rows x 1
    Mat above_floor;  // pnv batch statistics: 1 where q >= eps, else 0
    bool batch_stats = false;
  };

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  Norm() = default;
  Norm(NormKind kind, Eigen::Index channels);

  NormKind kind() const noexcept { return kind_; }

  Mat forward(const Mat& u, Mode mode, Cache& cache);
  Mat backward(const Cache& cache, const Mat& dy);

  Param gain;
  Param bias;          // layernorm only
  Mat running_sq_mean;  // pnv only, 1 x n

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gain", gain);
    if (kind_ == NormKind::layernorm) f(prefix + ".bias", bias);
  }
  template <class F>
  void visit_buffers(const std::string& prefix, F&& f) {
    if (kind_ == NormKind::pnv) f(prefix + ".running_sq_mean", running_sq_mean);
  }

 private:
  NormKind kind_ = NormKind::pnv;
};

/// Residual scale (2L)^(1/4).
double deepnorm_alpha(std::size_t num_layers);
/// Output-projection init scale (8L)^(-1/4).
double deepnorm_beta(std::size_t num_layers);

struct LayerConfig {
  std::size_t dim = 1;
  Activation activation = Activation::silu;
  double attn_eps = 1e-5;
  double logit_clamp = 40.0;
  /// Multiply logits by log d^- instead of multiplying exp(logit) by d^-.
  bool log_length_scaling = false;
  NormKind norm = NormKind::pnv;
  double alpha = 1.0;
};

/// One attention layer: degree-scaled additive attention over in-edges,
/// ordered-pair edge update, FFN, scaled residual and post-normalization.
class AttentionLayer {
 public:
  struct Cache {
    Mat x, e, hx, tx;
    Mat logits, exp_logits, s, denom, a, msg;
    Mat node_pre, edge_pre;   // x~ + b_act, e~ + b_act
    Mat node_act, edge_act;   // phi(...)
    Norm::Cache norm_node, norm_edge;
    DropKeyMask mask;
  };

  AttentionLayer() = default;
  explicit AttentionLayer(const LayerConfig& cfg);

  const LayerConfig& config() const noexcept { return cfg_; }
  void set_alpha(double alpha) { cfg_.alpha = alpha; }

  /// Initializes weights; output projections are scaled by `out_gain`.
  void init(std::mt19937_64& rng, double out_gain);

  /// s = keep * d^-(tail) * exp(min(W_attn e + b, clamp))
  Mat attention_scores(const Mat& e, const AttentionTopology& topo, const DropKeyMask& mask,
                       Mat* logits = nullptr, Mat* exp_logits = nullptr) const;
  /// (x~, e~)
  std::pair<Mat, Mat> aggregate(const Mat& x, const Mat& e, const Mat& a,
                                const AttentionTopology& topo, Mat* msg = nullptr) const;
  /// (x^, e^); e^ row r belongs to edge r read with reversed endpoints.
  std::pair<Mat, Mat> ffn(const Mat& x_tilde, const Mat& e_tilde) const;

  std::pair<Mat, Mat> forward(const Mat& x, const Mat& e, const AttentionTopology& topo,
                              const DropKeyMask& mask, Mode mode, Cache& cache);
  /// Accumulates parameter gradients, returns (dx, de) w.r.t. layer inputs.
  std::pair<Mat, Mat> backward(const Cache& cache, const AttentionTopology& topo,
                               const Mat& dx_out, const Mat& de_out);

  Linear w_attn;        // attn <- edge
  Linear w_tail_tail;
  Linear w_tail_head;
  Linear w_tail_edge;
  Linear w_edge_edge;
  Linear w_edge_head;
  Linear w_edge_tail;
  Linear w_node_out;
  Linear w_edge_out;
  Param b_node_act;
  Param b_edge_act;
  Norm norm_node;
  Norm norm_edge;

  template <class F>
  void visit(const std::string& p, F&& f) {
    w_attn.visit(p + ".w_attn", f);
    w_tail_tail.visit(p + ".w_tail_tail", f);
    w_tail_head.visit(p + ".w_tail_head", f);
    w_tail_edge.visit(p + ".w_tail_edge", f);
    w_edge_edge.visit(p + ".w_edge_edge", f);
    w_edge_head.visit(p + ".w_edge_head", f);
    w_edge_tail.visit(p + ".w_edge_tail", f);
    w_node_out.visit(p + ".w_node_out", f);
    w_edge_out.visit(p + ".w_edge_out", f);
    f(p + ".b_node_act", b_node_act);
    f(p + ".b_edge_act", b_edge_act);
    norm_node.visit(p + ".norm_node", f);
    norm_edge.visit(p + ".norm_edge", f);
  }
  template <class F>
  void visit_buffers(const std::string& p, F&& f) {
    norm_node.visit_buffers(p + ".norm_node", f);
    norm_edge.visit_buffers(p + ".norm_edge", f);
  }

 private:
  LayerConfig cfg_;
};

/// a_ij = s_ij / (sum over in-edges of j of s + eps), per channel.
Mat attention_weights(const Mat& s, const AttentionTopology& topo, double eps);

}  // namespace grass
