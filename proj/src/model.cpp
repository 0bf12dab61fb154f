// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/model.hpp"

#include <algorithm>
#include <cmath>

#include "grass/error.hpp"

namespace grass {

namespace {

void fill_normal(Mat& m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
}

std::vector<Index> category_ids(const Mat& feat, std::size_t vocab) {
  require(feat.rows() == 0 || feat.cols() >= 1, "categorical input needs an id column");
  std::vector<Index> ids(static_cast<std::size_t>(feat.rows()));
  for (Eigen::Index r = 0; r < feat.rows(); ++r) {
    const double v = feat(r, 0);
    if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(vocab)) {
      fail(ErrorKind::validation, "category id " + std::to_string(v) + " outside vocabulary of " +
                                      std::to_string(vocab));
    }
    ids[static_cast<std::size_t>(r)] = static_cast<Index>(v);
  }
  return ids;
}

}  // namespace

ModelInput assemble_input(std::span<const RewiredGraph> graphs,
                          std::span<const GraphEncoding* const> encodings) {
  require(!graphs.empty(), "cannot assemble an empty batch");
  require(graphs.size() == encodings.size(), "one encoding per graph required");
  ModelInput in;
  in.num_graphs = graphs.size();
  std::size_t total_nodes = 0, total_edges = 0;
  // Graphs without rows carry no width information and are exempt.
  auto width = [&](auto feat_of) {
    Eigen::Index w = -1;
    for (const RewiredGraph& h : graphs) {
      const Mat& f = feat_of(h.base());
      if (f.rows() == 0) continue;
      if (w >= 0 && f.cols() != w) {
        fail(ErrorKind::validation, "feature widths differ between graphs in a batch");
      }
      w = f.cols();
    }
    return std::max<Eigen::Index>(w, 0);
  };
  const Eigen::Index node_w = width([](const Graph& g) -> const Mat& { return g.node_features(); });
  const Eigen::Index edge_w = width([](const Graph& g) -> const Mat& { return g.edge_features(); });
  for (const RewiredGraph& h : graphs) {
    total_nodes += h.num_nodes();
    total_edges += h.num_edges();
  }
  const std::size_t k = encodings[0]->rrwp.k();
  in.num_nodes = total_nodes;
  in.head.reserve(total_edges);
  in.tail.reserve(total_edges);
  in.origin.reserve(total_edges);
  in.node_graph.reserve(total_nodes);
  in.edge_graph.reserve(total_edges);
  in.node_feat = Mat::Zero(static_cast<Eigen::Index>(total_nodes), node_w);
  in.edge_feat = Mat::Zero(static_cast<Eigen::Index>(total_edges), edge_w);
  in.raw.node.resize(static_cast<Eigen::Index>(total_nodes), static_cast<Eigen::Index>(k));
  in.raw.edge.resize(static_cast<Eigen::Index>(total_edges), static_cast<Eigen::Index>(k));
  in.out_degree.reserve(total_nodes);
  in.in_degree.reserve(total_nodes);

  Eigen::Index node_off = 0, edge_off = 0;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const RewiredGraph& h = graphs[g];
    const GraphEncoding& enc = *encodings[g];
    require(enc.rrwp.k() == k, "encodings in a batch must share k");
    if (enc.degrees.out_degree.size() != h.num_nodes()) {
      fail(ErrorKind::validation, "cache entry does not match graph (node count)");
    }
    const RawEncodings raw = lookup_encodings(enc.rrwp, h);
    const auto n = static_cast<Eigen::Index>(h.num_nodes());
    const auto m = static_cast<Eigen::Index>(h.num_edges());
    in.raw.node.middleRows(node_off, n) = raw.node;
    in.raw.edge.middleRows(edge_off, m) = raw.edge;
    if (n > 0 && node_w > 0) in.node_feat.middleRows(node_off, n) = h.base().node_features();
    const auto m0 = static_cast<Eigen::Index>(h.num_original_edges());
    if (m0 > 0 && edge_w > 0) in.edge_feat.middleRows(edge_off, m0) = h.base().edge_features();
    for (std::size_t e = 0; e < h.num_edges(); ++e) {
      const Edge ed = h.edge(e);
      in.head.push_back(ed.head + static_cast<Index>(node_off));
      in.tail.push_back(ed.tail + static_cast<Index>(node_off));
      in.origin.push_back(h.origin(e));
      in.edge_graph.push_back(static_cast<Index>(g));
    }
    for (std::size_t i = 0; i < h.num_nodes(); ++i) {
      in.node_graph.push_back(static_cast<Index>(g));
      in.out_degree.push_back(enc.degrees.out_degree[i]);
      in.in_degree.push_back(enc.degrees.in_degree[i]);
    }
    node_off += n;
    edge_off += m;
  }
  return in;
}

ModelInput assemble_input(const RewiredGraph& h, const GraphEncoding& enc) {
  const GraphEncoding* p = &enc;
  return assemble_input(std::span<const RewiredGraph>(&h, 1), std::span<const GraphEncoding* const>(&p, 1));
}

Mat pool(const ModelInput& in, const Mat& node_out, const Mat& edge_out, PoolKind kind) {
  const Eigen::Index n = node_out.cols();
  const auto g = static_cast<Eigen::Index>(in.num_graphs);
  Mat y = Mat::Zero(g, 3 * n);
  Mat count = Mat::Zero(g, 3);
  for (std::size_t i = 0; i < in.num_nodes; ++i) {
    y.row(in.node_graph[i]).segment(0, n) += node_out.row(static_cast<Eigen::Index>(i));
    count(in.node_graph[i], 0) += 1.0;
  }
  for (std::size_t e = 0; e < in.num_edges(); ++e) {
    const Eigen::Index seg = in.origin[e] == EdgeOrigin::original ? 1 : 2;
    y.row(in.edge_graph[e]).segment(seg * n, n) += edge_out.row(static_cast<Eigen::Index>(e));
    count(in.edge_graph[e], seg) += 1.0;
  }
  if (kind == PoolKind::mean) {
    for (Eigen::Index r = 0; r < g; ++r) {
      for (Eigen::Index s = 0; s < 3; ++s) {
        if (count(r, s) > 0.0) y.row(r).segment(s * n, n) /= count(r, s);
      }
    }
  }
  return y;
}

InputEmbedding::InputEmbedding(const InputSpec& spec, std::size_t dim) : spec_(spec), dim_(dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  switch (spec.kind) {
    case InputKind::categorical:
      require(spec.vocab >= 1, "categorical input needs vocab >= 1");
      table = Param(static_cast<Eigen::Index>(spec.vocab), n, false);
      break;
    case InputKind::linear:
      require(spec.feat_dim >= 1, "linear input needs feat_dim >= 1");
      linear = Linear(static_cast<Eigen::Index>(spec.feat_dim), n);
      break;
    case InputKind::none:
      table = Param(1, n, false);
      break;
  }
}

Mat InputEmbedding::forward(const Mat& feat, std::size_t rows) const {
  switch (spec_.kind) {
    case InputKind::categorical:
      return gather_rows(table.value, category_ids(feat, spec_.vocab));
    case InputKind::linear:
      if (feat.cols() != static_cast<Eigen::Index>(spec_.feat_dim)) {
        fail(ErrorKind::validation, "input feature width " + std::to_string(feat.cols()) +
                                        " != configured " + std::to_string(spec_.feat_dim));
      }
      return linear.forward(feat);
    case InputKind::none:
      break;
  }
  return table.value.row(0).replicate(static_cast<Eigen::Index>(rows), 1);
}

void InputEmbedding::backward(const Mat& feat, const Mat& dy) {
  switch (spec_.kind) {
    case InputKind::categorical:
      scatter_add_rows(table.grad, category_ids(feat, spec_.vocab), dy);
      return;
    case InputKind::linear:
      linear.backward(feat, dy);
      return;
    case InputKind::none:
      table.grad.row(0) += col_sum(dy);
      return;
  }
}

void InputEmbedding::init(std::mt19937_64& rng) {
  if (spec_.kind == InputKind::linear) linear.init(rng);
  else fill_normal(table.value, rng);
}

GrassModel::GrassModel(const Config& cfg) : cfg_(cfg) {
  cfg.validate();
  const ModelConfig& mc = cfg.model;
  require(mc.dim >= 1, "model dim must be >= 1");
  require(mc.layers >= 1, "model needs at least one layer");
  const auto n = static_cast<Eigen::Index>(mc.dim);
  node_input = InputEmbedding(mc.node_input, mc.dim);
  edge_input = InputEmbedding(mc.edge_input, mc.dim);
  added_edge = Param(1, n, false);
  EncoderConfig ec;
  ec.k = cfg.encode.k;
  ec.dim = mc.dim;
  ec.rrwp_enabled = cfg.rrwp_enabled;
  ec.degree_mode = cfg.degree_mode();
  ec.max_out_degree = cfg.encode.max_out_degree;
  ec.max_in_degree = cfg.encode.max_in_degree;
  encoder = Encoder(ec);
  alpha_ = deepnorm_alpha(mc.layers);
  LayerConfig lc;
  lc.dim = mc.dim;
  lc.activation = mc.activation;
  lc.attn_eps = mc.attn_eps;
  lc.log_length_scaling = mc.log_length_scaling;
  lc.norm = cfg.norm;
  lc.alpha = alpha_;
  layers.assign(mc.layers, AttentionLayer(lc));
  const Eigen::Index head_in = is_graph_task(mc.task) ? 3 * n : n;
  const auto out = static_cast<Eigen::Index>(mc.out_dim);
  if (has_hidden_head()) {
    const auto hid = static_cast<Eigen::Index>(mc.head_hidden);
    head_hidden = Linear(head_in, hid);
    head_out = Linear(hid, out);
  } else {
    head_out = Linear(head_in, out);
  }
}

bool GrassModel::has_hidden_head() const noexcept { return cfg_.model.head_hidden > 0; }

bool GrassModel::layer_reversed(std::size_t l) const noexcept {
  return cfg_.edge_flip && l % 2 == 0;
}

ModelOutput GrassModel::forward(const ModelInput& in, Mode mode, Rng& dropkey_rng, Cache* cache) {
  Cache local;
  Cache& c = cache ? *cache : local;
  const auto n = static_cast<Eigen::Index>(cfg_.model.dim);
  const auto num_nodes = static_cast<Eigen::Index>(in.num_nodes);
  const auto num_edges = static_cast<Eigen::Index>(in.num_edges());
  require(in.node_feat.rows() == num_nodes && in.edge_feat.rows() == num_edges &&
              in.origin.size() == in.num_edges() && in.tail.size() == in.num_edges(),
          "model input arrays are inconsistent");

  c.node_in = node_input.forward(in.node_feat, in.num_nodes);
  c.edge_in.resize(num_edges, n);
  {
    std::vector<Index> orig;
    for (std::size_t e = 0; e < in.num_edges(); ++e) {
      if (in.origin[e] == EdgeOrigin::original) orig.push_back(static_cast<Index>(e));
    }
    const Mat emb = edge_input.forward(gather_rows(in.edge_feat, orig), orig.size());
    for (std::size_t e = 0, o = 0; e < in.num_edges(); ++e) {
      if (in.origin[e] == EdgeOrigin::original) c.edge_in.row(static_cast<Eigen::Index>(e)) = emb.row(static_cast<Eigen::Index>(o++));
      else c.edge_in.row(static_cast<Eigen::Index>(e)) = added_edge.value.row(0);
    }
  }

  Encoder::Inputs ei;
  ei.node_raw = &in.raw.node;
  ei.edge_raw = &in.raw.edge;
  ei.out_degree = in.out_degree;
  ei.in_degree = in.in_degree;
  Mat x, e;
  encoder.forward(c.node_in, c.edge_in, ei, mode, x, e, c.encoder);

  const AttentionTopology base = make_topology(in.num_nodes, in.head, in.tail, false);
  const AttentionTopology rev = flip(base);
  c.topologies.clear();
  c.layers.assign(layers.size(), AttentionLayer::Cache{});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const AttentionTopology& topo = layer_reversed(l + 1) ? rev : base;
    const DropKeyMask mask = sample_dropkey(in.num_edges(), cfg_.model.dim, cfg_.dropkey_rate, mode,
                                            dropkey_rng);
    try {
      std::tie(x, e) = layers[l].forward(x, e, topo, mask, mode, c.layers[l]);
    } catch (const Error& err) {
      fail(err.kind(), "layer " + std::to_string(l + 1) + ": " + err.what());
    }
    c.topologies.push_back(topo);
  }

  ModelOutput out;
  out.node_out = x;
  out.edge_out = e;
  const Mat* head_in = &out.node_out;
  if (is_graph_task(cfg_.model.task)) {
    out.pooled = pool(in, x, e, cfg_.pool);
    head_in = &out.pooled;
  }
  if (has_hidden_head()) {
    c.hidden_pre = head_hidden.forward(*head_in);
    out.predictions = head_out.forward(activate(cfg_.model.activation, c.hidden_pre));
  } else {
    out.predictions = head_out.forward(*head_in);
  }
  if (!out.predictions.allFinite()) fail(ErrorKind::numeric, "non-finite predictions");
  c.node_out = out.node_out;
  c.edge_out = out.edge_out;
  c.pooled = out.pooled;
  return out;
}

void GrassModel::backward(const ModelInput& in, const Cache& c, const Mat& dpred) {
  const bool graph_task = is_graph_task(cfg_.model.task);
  const Mat& head_in = graph_task ? c.pooled : c.node_out;
  Mat dhead_in;
  if (has_hidden_head()) {
    const Mat act = activate(cfg_.model.activation, c.hidden_pre);
    const Mat dact = head_out.backward(act, dpred);
    const Mat dpre = dact.cwiseProduct(activate_grad(cfg_.model.activation, c.hidden_pre));
    dhead_in = head_hidden.backward(head_in, dpre);
  } else {
    dhead_in = head_out.backward(head_in, dpred);
  }

  const Eigen::Index n = c.node_out.cols();
  Mat dx, de;
  if (graph_task) {
    dx = Mat::Zero(c.node_out.rows(), n);
    de = Mat::Zero(c.edge_out.rows(), n);
    Mat scale = Mat::Ones(static_cast<Eigen::Index>(in.num_graphs), 3);
    if (cfg_.pool == PoolKind::mean) {
      Mat count = Mat::Zero(static_cast<Eigen::Index>(in.num_graphs), 3);
      for (Index g : in.node_graph) count(g, 0) += 1.0;
      for (std::size_t e = 0; e < in.num_edges(); ++e) {
        count(in.edge_graph[e], in.origin[e] == EdgeOrigin::original ? 1 : 2) += 1.0;
      }
      for (Eigen::Index i = 0; i < count.size(); ++i) {
        if (count.data()[i] > 0.0) scale.data()[i] = 1.0 / count.data()[i];
      }
    }
    for (std::size_t i = 0; i < in.num_nodes; ++i) {
      const Index g = in.node_graph[i];
      dx.row(static_cast<Eigen::Index>(i)) = scale(g, 0) * dhead_in.row(g).segment(0, n);
    }
    for (std::size_t e = 0; e < in.num_edges(); ++e) {
      const Index g = in.edge_graph[e];
      const Eigen::Index seg = in.origin[e] == EdgeOrigin::original ? 1 : 2;
      de.row(static_cast<Eigen::Index>(e)) = scale(g, seg) * dhead_in.row(g).segment(seg * n, n);
    }
  } else {
    dx = std::move(dhead_in);
    de = Mat::Zero(c.edge_out.rows(), n);
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    std::tie(dx, de) = layers[l].backward(c.layers[l], c.topologies[l], dx, de);
  }
  encoder.backward(c.encoder, dx, de);
  node_input.backward(in.node_feat, dx);

  std::vector<Index> orig;
  for (std::size_t e = 0; e < in.num_edges(); ++e) {
    if (in.origin[e] == EdgeOrigin::original) orig.push_back(static_cast<Index>(e));
    else added_edge.grad.row(0) += de.row(static_cast<Eigen::Index>(e));
  }
  edge_input.backward(gather_rows(in.edge_feat, orig), gather_rows(de, orig));
}

void GrassModel::zero_grad() {
  visit([](const std::string&, Param& p) { p.zero_grad(); });
}

std::size_t GrassModel::parameter_count() {
  std::size_t total = 0;
  visit([&](const std::string&, Param& p) { total += static_cast<std::size_t>(p.size()); });
  return total;
}

GrassModel init_params(const Config& cfg, std::uint64_t seed) {
  GrassModel m(cfg);
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(Stream::init)});
  m.node_input.init(rng);
  m.edge_input.init(rng);
  fill_normal(m.added_edge.value, rng);
  m.encoder.init(rng);
  const double beta = deepnorm_beta(cfg.model.layers);
  for (AttentionLayer& layer : m.layers) {
    layer.init(rng, beta);
    layer.set_alpha(m.alpha_);
  }
  if (m.has_hidden_head()) m.head_hidden.init(rng);
  m.head_out.init(rng);
  m.zero_grad();
  return m;
}

ModelOutput forward(GrassModel& model, const GraphPtr& g, const GraphEncoding& enc,
                    const RewireConfig& rewire_cfg, Mode mode, Rng& rewire_rng, Rng& dropkey_rng) {
  require(g != nullptr, "null graph");
  if (enc.rrwp.num_nodes() != g->num_nodes()) {
    fail(ErrorKind::validation, "cache entry does not match graph (node count)");
  }
  const RewiredGraph h = rewire(g, rewire_cfg, rewire_rng);
  const ModelInput in = assemble_input(h, enc);
  return model.forward(in, mode, dropkey_rng);
}

}  // namespace grass
