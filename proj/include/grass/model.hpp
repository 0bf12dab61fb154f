// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "grass/cache.hpp"
#include "grass/config.hpp"
#include "grass/encode.hpp"
#include "grass/layer.hpp"
#include "grass/rewire.hpp"

namespace grass {

/// Disjoint union of rewired graphs with their looked-up encodings; the
/// unit the model consumes.
struct ModelInput {
  std::size_t num_graphs = 0;
  std::size_t num_nodes = 0;
  std::vector<Index> head, tail;
  std::vector<EdgeOrigin> origin;
  std::vector<Index> node_graph, edge_graph;
  Mat node_feat;  // |V| x d_node
  Mat edge_feat;  // |E_H| x d_edge; rows of added edges are zero
  RawEncodings raw;
  std::vector<Index> out_degree, in_degree;  // of the input graphs

  std::size_t num_edges() const noexcept { return head.size(); }
};

ModelInput assemble_input(std::span<const RewiredGraph> graphs,
                          std::span<const GraphEncoding* const> encodings);
ModelInput assemble_input(const RewiredGraph& h, const GraphEncoding& enc);

struct ModelOutput {
  Mat node_out;     // |V| x n
  Mat edge_out;     // |E_H| x n
  Mat pooled;       // num_graphs x 3n, graph tasks only
  Mat predictions;  // num_graphs x out (graph tasks) or |V| x out
};

/// y = [sum_i x_i | sum_{original} e | sum_{added} e] per member graph, or
/// the three means when `kind` is mean (empty segments pool to zero).
Mat pool(const ModelInput& in, const Mat& node_out, const Mat& edge_out, PoolKind kind);

/// Learned input feature map: embedding lookup, affine map, or one shared
/// vector when the dataset carries no features.
class InputEmbedding {
 public:
  InputEmbedding() = default;
  InputEmbedding(const InputSpec& spec, std::size_t dim);

  Mat forward(const Mat& feat, std::size_t rows) const;
  void backward(const Mat& feat, const Mat& dy);
  void init(std::mt19937_64& rng);

  const InputSpec& spec() const noexcept { return spec_; }

  Param table;  // categorical: vocab x n; none: 1 x n
  Linear linear;

  template <class F>
  void visit(const std::string& p, F&& f) {
    if (spec_.kind == InputKind::linear) linear.visit(p + ".linear", f);
    else f(p + ".table", table);
  }

 private:
  InputSpec spec_;
  std::size_t dim_ = 0;
};

class GrassModel {
 public:
  struct Cache {
    Mat node_in, edge_in;  // embedded inputs before encodings
    Encoder::Cache encoder;
    std::vector<AttentionTopology> topologies;
    std::vector<AttentionLayer::Cache> layers;
    Mat node_out, edge_out, pooled, hidden_pre;
  };

  GrassModel() = default;
  explicit GrassModel(const Config& cfg);

  const Config& config() const noexcept { return cfg_; }
  double alpha() const noexcept { return alpha_; }

  /// Orientation of layer l (1-indexed): H's own directions iff l is odd
  /// or edge flipping is disabled.
  bool layer_reversed(std::size_t l) const noexcept;

  ModelOutput forward(const ModelInput& in, Mode mode, Rng& dropkey_rng, Cache* cache = nullptr);
  /// Seeds the backward pass with dL/dpredictions.
  void backward(const ModelInput& in, const Cache& cache, const Mat& dpred);

  void zero_grad();
  std::size_t parameter_count();

  InputEmbedding node_input;
  InputEmbedding edge_input;
  Param added_edge;  // 1 x n, shared by every added edge
  Encoder encoder;
  std::vector<AttentionLayer> layers;
  Linear head_hidden;  // unused for linear heads
  Linear head_out;

  template <class F>
  void visit(F&& f) {
    node_input.visit("node_input", f);
    edge_input.visit("edge_input", f);
    f("added_edge", added_edge);
    encoder.visit("encoder", f);
    for (std::size_t l = 0; l < layers.size(); ++l) layers[l].visit("layers." + std::to_string(l), f);
    if (has_hidden_head()) head_hidden.visit("head.hidden", f);
    head_out.visit("head.out", f);
  }
  template <class F>
  void visit_buffers(F&& f) {
    encoder.visit_buffers("encoder", f);
    for (std::size_t l = 0; l < layers.size(); ++l)
      layers[l].visit_buffers("layers." + std::to_string(l), f);
  }

  bool has_hidden_head() const noexcept;

 private:
  friend GrassModel init_params(const Config&, std::uint64_t);

  Config cfg_;
  double alpha_ = 1.0;
};

/// Deterministic for a given seed. Throws on inconsistent dimensions.
GrassModel init_params(const Config& cfg, std::uint64_t seed);

/// Rewires g (fresh sample from `rewire_rng`), looks up encodings and runs
/// the model on the single graph.
ModelOutput forward(GrassModel& model, const GraphPtr& g, const GraphEncoding& enc,
                    const RewireConfig& rewire_cfg, Mode mode, Rng& rewire_rng,
                    Rng& dropkey_rng);

}  // namespace grass
