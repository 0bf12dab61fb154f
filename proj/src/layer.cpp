// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/layer.hpp"

#include <cmath>
#include <string>

#include "grass/error.hpp"

namespace grass {

AttentionTopology make_topology(std::size_t num_nodes, std::span<const Index> heads,
                                std::span<const Index> tails, bool reversed) {
  require(heads.size() == tails.size(), "head and tail lists differ in length");
  AttentionTopology t;
  t.num_nodes = num_nodes;
  t.reversed = reversed;
  if (reversed) {
    t.head.assign(tails.begin(), tails.end());
    t.tail.assign(heads.begin(), heads.end());
  } else {
    t.head.assign(heads.begin(), heads.end());
    t.tail.assign(tails.begin(), tails.end());
  }
  t.in_ptr.assign(num_nodes + 1, 0);
  for (std::size_t e = 0; e < t.tail.size(); ++e) {
    require(t.head[e] < num_nodes && t.tail[e] < num_nodes, "topology edge out of range");
    ++t.in_ptr[t.tail[e] + 1];
  }
  for (std::size_t j = 0; j < num_nodes; ++j) t.in_ptr[j + 1] += t.in_ptr[j];
  t.in_edges.resize(t.tail.size());
  std::vector<std::size_t> fill(t.in_ptr.begin(), t.in_ptr.end() - 1);
  for (std::size_t e = 0; e < t.tail.size(); ++e) t.in_edges[fill[t.tail[e]]++] = static_cast<Index>(e);
  t.in_degree.resize(num_nodes);
  for (std::size_t j = 0; j < num_nodes; ++j) {
    t.in_degree[j] = static_cast<double>(t.in_ptr[j + 1] - t.in_ptr[j]);
  }
  return t;
}

AttentionTopology flip(const AttentionTopology& topo) {
  AttentionTopology t = make_topology(topo.num_nodes, topo.tail, topo.head, false);
  t.reversed = !topo.reversed;
  return t;
}

DropKeyMask sample_dropkey(std::size_t num_edges, std::size_t dim, double rate, Mode mode,
                           Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, "DropKey rate must lie in [0, 1)");
  DropKeyMask m;
  m.rate = rate;
  if (mode == Mode::eval || rate == 0.0) return m;
  m.keep.resize(static_cast<Eigen::Index>(num_edges), static_cast<Eigen::Index>(dim));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < m.keep.size(); ++i) m.keep.data()[i] = u(rng) < rate ? 0.0 : 1.0;
  return m;
}

std::vector<Mat> message_mask(const AttentionTopology& topo, const DropKeyMask& mask,
                              std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(topo.num_nodes);
  std::vector<Mat> out(dim, Mat::Zero(n, n));
  for (std::size_t e = 0; e < topo.num_edges(); ++e) {
    for (std::size_t c = 0; c < dim; ++c) {
      if (mask.all_keep() || mask.keep(e, c) != 0.0) out[c](topo.head[e], topo.tail[e]) = 1.0;
    }
  }
  return out;
}

NormKind parse_norm_kind(std::string_view s) {
  if (s == "pnv" || s == "pn-v") return NormKind::pnv;
  if (s == "layernorm" || s == "ln") return NormKind::layernorm;
  fail(ErrorKind::validation, "unknown norm kind '" + std::string(s) + "'");
}

const char* to_string(NormKind k) noexcept { return k == NormKind::pnv ? "pnv" : "layernorm"; }

// ---------------------------------------------------------------------------

Norm::Norm(NormKind kind, Eigen::Index channels)
    : gain(1, channels, false),
      bias(1, channels, false),
      running_sq_mean(Mat::Ones(1, channels)),
      kind_(kind) {
  gain.value.setOnes();
}

Mat Norm::forward(const Mat& u, Mode mode, Cache& cache) {
  const auto rows = u.rows();
  if (kind_ == NormKind::pnv) {
    Mat sq;
    cache.batch_stats = mode == Mode::train && rows > 0;
    if (cache.batch_stats) {
      sq = u.array().square().colwise().mean().matrix();
      running_sq_mean = (1.0 - kMomentum) * running_sq_mean + kMomentum * sq;
    } else {
      sq = running_sq_mean;
    }
    // Channels below the floor are divided by sqrt(eps) and carry no
    // gradient through the statistic.
    cache.inv_scale = sq.unaryExpr([](double q) { return 1.0 / std::sqrt(std::max(q, kEps)); });
    cache.above_floor = sq.unaryExpr([](double q) { return q >= kEps ? 1.0 : 0.0; });
    cache.normalized = (u.array().rowwise() * cache.inv_scale.row(0).array()).matrix();
    return (cache.normalized.array().rowwise() * gain.value.row(0).array()).matrix();
  }
  cache.batch_stats = false;
  const double n = static_cast<double>(u.cols());
  Mat mu = u.rowwise().sum() / n;
  Mat centered = u.colwise() - mu.col(0);
  Mat var = centered.array().square().rowwise().sum().matrix() / n;
  cache.inv_scale = (var.array() + kEps).rsqrt().matrix();
  cache.normalized = (centered.array().colwise() * cache.inv_scale.col(0).array()).matrix();
  Mat y = (cache.normalized.array().rowwise() * gain.value.row(0).array()).matrix();
  y.rowwise() += bias.value.row(0);
  return y;
}

Mat Norm::backward(const Cache& cache, const Mat& dy) {
  gain.grad += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  const Mat dn = (dy.array().rowwise() * gain.value.row(0).array()).matrix();
  if (kind_ == NormKind::pnv) {
    if (!cache.batch_stats || dy.rows() == 0) {
      return (dn.array().rowwise() * cache.inv_scale.row(0).array()).matrix();
    }
    // du = (dn - n * mean(dn * n)) / sigma
    const Mat proj = ((dn.array() * cache.normalized.array()).colwise().mean() *
                      cache.above_floor.row(0).array())
                         .matrix();
    Mat du = dn - (cache.normalized.array().rowwise() * proj.row(0).array()).matrix();
    return (du.array().rowwise() * cache.inv_scale.row(0).array()).matrix();
  }
  bias.grad += dy.colwise().sum();
  const double n = static_cast<double>(dy.cols());
  Mat mean_dn = dn.rowwise().sum() / n;
  Mat mean_dnn = (dn.array() * cache.normalized.array()).rowwise().sum().matrix() / n;
  Mat du = dn;
  du.colwise() -= mean_dn.col(0);
  du -= (cache.normalized.array().colwise() * mean_dnn.col(0).array()).matrix();
  return (du.array().colwise() * cache.inv_scale.col(0).array()).matrix();
}

double deepnorm_alpha(std::size_t num_layers) {
  require(num_layers >= 1, "DeepNorm needs at least one layer");
  return std::pow(2.0 * static_cast<double>(num_layers), 0.25);
}

double deepnorm_beta(std::size_t num_layers) {
  require(num_layers >= 1, "DeepNorm needs at least one layer");
  return std::pow(8.0 * static_cast<double>(num_layers), -0.25);
}

// ---------------------------------------------------------------------------

AttentionLayer::AttentionLayer(const LayerConfig& cfg) : cfg_(cfg) {
  require(cfg.dim >= 1, "layer dim must be >= 1");
  require(cfg.attn_eps >= 0.0, "attention epsilon must be >= 0");
  const auto n = static_cast<Eigen::Index>(cfg.dim);
  for (Linear* l : {&w_attn, &w_tail_tail, &w_tail_head, &w_tail_edge, &w_edge_edge, &w_edge_head,
                    &w_edge_tail, &w_node_out, &w_edge_out}) {
    *l = Linear(n, n);
  }
  b_node_act = Param(1, n, false);
  b_edge_act = Param(1, n, false);
  norm_node = Norm(cfg.norm, n);
  norm_edge = Norm(cfg.norm, n);
}

void AttentionLayer::init(std::mt19937_64& rng, double out_gain) {
  for (Linear* l : {&w_attn, &w_tail_tail, &w_tail_head, &w_tail_edge, &w_edge_edge, &w_edge_head,
                    &w_edge_tail}) {
    l->init(rng);
  }
  w_node_out.init(rng, out_gain);
  w_edge_out.init(rng, out_gain);
  b_node_act.value.setZero();
  b_edge_act.value.setZero();
}

Mat AttentionLayer::attention_scores(const Mat& e, const AttentionTopology& topo,
                                     const DropKeyMask& mask, Mat* logits,
                                     Mat* exp_logits) const {
  if (!e.allFinite()) fail(ErrorKind::numeric, "non-finite edge features entering attention");
  require(static_cast<std::size_t>(e.rows()) == topo.num_edges(), "edge rows != topology edges");
  Mat z = w_attn.forward(e);
  Mat g(z.rows(), z.cols());
  const double clamp = cfg_.logit_clamp;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double deg = topo.in_degree[topo.tail[r]];
    if (cfg_.log_length_scaling) {
      const double scale = std::log(deg);
      for (Eigen::Index c = 0; c < z.cols(); ++c) g(r, c) = std::exp(std::min(z(r, c), clamp) * scale);
    } else {
      for (Eigen::Index c = 0; c < z.cols(); ++c) g(r, c) = deg * std::exp(std::min(z(r, c), clamp));
    }
  }
  Mat s = mask.all_keep() ? g : Mat(g.cwiseProduct(mask.keep));
  if (logits) *logits = std::move(z);
  if (exp_logits) *exp_logits = std::move(g);
  return s;
}

Mat attention_weights(const Mat& s, const AttentionTopology& topo, double eps) {
  Mat a(s.rows(), s.cols());
  for (std::size_t j = 0; j < topo.num_nodes; ++j) {
    const std::size_t b = topo.in_ptr[j], e = topo.in_ptr[j + 1];
    if (b == e) continue;
    Eigen::RowVectorXd denom = Eigen::RowVectorXd::Constant(s.cols(), eps);
    for (std::size_t p = b; p < e; ++p) denom += s.row(topo.in_edges[p]);
    for (std::size_t p = b; p < e; ++p) {
      const Index ed = topo.in_edges[p];
      a.row(ed) = s.row(ed).array() / denom.array();
    }
  }
  return a;
}

namespace {

/// Per tail node, eps + sum of s over its in-edges.
Mat tail_sums(const Mat& s, const AttentionTopology& topo, double eps) {
  Mat d = Mat::Constant(static_cast<Eigen::Index>(topo.num_nodes), s.cols(), eps);
  scatter_add_rows(d, topo.tail, s);
  return d;
}

}  // namespace

std::pair<Mat, Mat> AttentionLayer::aggregate(const Mat& x, const Mat& e, const Mat& a,
                                              const AttentionTopology& topo, Mat* msg) const {
  const auto n = static_cast<Eigen::Index>(cfg_.dim);
  if (x.cols() != n || e.cols() != n || a.cols() != n ||
      static_cast<std::size_t>(x.rows()) != topo.num_nodes ||
      static_cast<std::size_t>(e.rows()) != topo.num_edges() || a.rows() != e.rows()) {
    fail(ErrorKind::validation, "aggregate: shapes disagree with topology");
  }
  const Mat hx = gather_rows(x, topo.head);
  const Mat tx = gather_rows(x, topo.tail);
  Mat m = w_tail_head.forward(hx) + w_tail_edge.forward(e);
  Mat x_tilde = w_tail_tail.forward(x);
  scatter_add_rows(x_tilde, topo.tail, a.cwiseProduct(m));
  Mat e_tilde = w_edge_edge.forward(e) + w_edge_head.forward(hx) + w_edge_tail.forward(tx);
  if (msg) *msg = std::move(m);
  return {std::move(x_tilde), std::move(e_tilde)};
}

std::pair<Mat, Mat> AttentionLayer::ffn(const Mat& x_tilde, const Mat& e_tilde) const {
  Mat pn = x_tilde;
  pn.rowwise() += b_node_act.value.row(0);
  Mat pe = e_tilde;
  pe.rowwise() += b_edge_act.value.row(0);
  return {w_node_out.forward(activate(cfg_.activation, pn)),
          w_edge_out.forward(activate(cfg_.activation, pe))};
}

std::pair<Mat, Mat> AttentionLayer::forward(const Mat& x, const Mat& e,
                                            const AttentionTopology& topo,
                                            const DropKeyMask& mask, Mode mode, Cache& c) {
  if (!x.allFinite()) fail(ErrorKind::numeric, "non-finite node features entering layer");
  c.x = x;
  c.e = e;
  c.mask = mask;
  c.s = attention_scores(e, topo, mask, &c.logits, &c.exp_logits);
  c.denom = tail_sums(c.s, topo, cfg_.attn_eps);
  c.a.resize(c.s.rows(), c.s.cols());
  for (Eigen::Index r = 0; r < c.s.rows(); ++r) {
    c.a.row(r) = c.s.row(r).array() / c.denom.row(topo.tail[r]).array();
  }

  auto [x_tilde, e_tilde] = aggregate(x, e, c.a, topo, &c.msg);
  c.hx = gather_rows(x, topo.head);
  c.tx = gather_rows(x, topo.tail);

  c.node_pre = std::move(x_tilde);
  c.node_pre.rowwise() += b_node_act.value.row(0);
  c.edge_pre = std::move(e_tilde);
  c.edge_pre.rowwise() += b_edge_act.value.row(0);
  c.node_act = activate(cfg_.activation, c.node_pre);
  c.edge_act = activate(cfg_.activation, c.edge_pre);
  const Mat x_hat = w_node_out.forward(c.node_act);
  const Mat e_hat = w_edge_out.forward(c.edge_act);

  Mat x_out = norm_node.forward(x + cfg_.alpha * x_hat, mode, c.norm_node);
  Mat e_out = norm_edge.forward(e + cfg_.alpha * e_hat, mode, c.norm_edge);
  if (!x_out.allFinite() || !e_out.allFinite()) {
    fail(ErrorKind::numeric, "non-finite layer output");
  }
  return {std::move(x_out), std::move(e_out)};
}

std::pair<Mat, Mat> AttentionLayer::backward(const Cache& c, const AttentionTopology& topo,
                                             const Mat& dx_out, const Mat& de_out) {
  const Mat dux = norm_node.backward(c.norm_node, dx_out);
  const Mat due = norm_edge.backward(c.norm_edge, de_out);
  Mat dx = dux;
  Mat de = due;

  // FFN
  const Mat dnode_act = w_node_out.backward(c.node_act, cfg_.alpha * dux);
  const Mat dedge_act = w_edge_out.backward(c.edge_act, cfg_.alpha * due);
  const Mat dxt = dnode_act.cwiseProduct(activate_grad(cfg_.activation, c.node_pre));
  const Mat det = dedge_act.cwiseProduct(activate_grad(cfg_.activation, c.edge_pre));
  b_node_act.grad += dxt.colwise().sum();
  b_edge_act.grad += det.colwise().sum();

  // Edge update: e~ = W_ee e + W_eh x_head + W_et x_tail
  de += w_edge_edge.backward(c.e, det);
  Mat dhx = w_edge_head.backward(c.hx, det);
  const Mat dtx = w_edge_tail.backward(c.tx, det);

  // Node update: x~ = W_tt x + sum_in a * (W_th x_head + W_te e)
  dx += w_tail_tail.backward(c.x, dxt);
  const Mat dagg = gather_rows(dxt, topo.tail);
  const Mat da = dagg.cwiseProduct(c.msg);
  const Mat dm = dagg.cwiseProduct(c.a);
  dhx += w_tail_head.backward(c.hx, dm);
  de += w_tail_edge.backward(c.e, dm);

  // a = s / S_tail  =>  ds = (da - sum_in(da * a)) / S_tail
  Mat q = Mat::Zero(static_cast<Eigen::Index>(topo.num_nodes), da.cols());
  scatter_add_rows(q, topo.tail, da.cwiseProduct(c.a));
  Mat ds(da.rows(), da.cols());
  for (Eigen::Index r = 0; r < da.rows(); ++r) {
    const Index j = topo.tail[r];
    ds.row(r) = (da.row(r) - q.row(j)).array() / c.denom.row(j).array();
  }

  // s = keep * g,  g = d^- exp(min(z, clamp))  or  exp(min(z, clamp) log d^-)
  Mat dz = ds.cwiseProduct(c.exp_logits);
  if (!c.mask.all_keep()) dz = dz.cwiseProduct(c.mask.keep);
  const double clamp = cfg_.logit_clamp;
  for (Eigen::Index r = 0; r < dz.rows(); ++r) {
    const double scale = cfg_.log_length_scaling ? std::log(topo.in_degree[topo.tail[r]]) : 1.0;
    for (Eigen::Index col = 0; col < dz.cols(); ++col) {
      dz(r, col) = c.logits(r, col) <= clamp ? dz(r, col) * scale : 0.0;
    }
  }
  de += w_attn.backward(c.e, dz);

  scatter_add_rows(dx, topo.head, dhx);
  scatter_add_rows(dx, topo.tail, dtx);
  return {std::move(dx), std::move(de)};
}

}  // namespace grass
