// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grass/error.hpp"
#include "grass/gradcheck.hpp"
#include "grass/layer.hpp"
#include "test_util.hpp"

namespace grass {
namespace {

using testing::randn;

struct RandomTopo {
  std::vector<Index> heads, tails;
};

RandomTopo random_edges(std::size_t n, std::size_t m, Rng& rng) {
  std::uniform_int_distribution<Index> node(0, static_cast<Index>(n - 1));
  RandomTopo t;
  for (std::size_t i = 0; i < m; ++i) {
    t.heads.push_back(node(rng));
    t.tails.push_back(node(rng));
  }
  return t;
}

AttentionLayer make_layer(std::size_t dim, Rng& rng, LayerConfig cfg = {}) {
  cfg.dim = dim;
  AttentionLayer layer(cfg);
  layer.init(rng, 0.7);
  // nonzero biases so every term participates
  layer.visit("l", [&](const std::string&, Param& p) {
    if (p.value.rows() == 1) p.value = randn(1, p.value.cols(), rng, 0.3);
  });
  layer.norm_node.gain.value = randn(1, static_cast<Eigen::Index>(dim), rng).array() + 1.5;
  layer.norm_edge.gain.value = randn(1, static_cast<Eigen::Index>(dim), rng).array() + 1.5;
  return layer;
}

TEST(Topology, InEdgesGroupedByTail) {
  const std::vector<Index> h{0, 1, 2, 2}, t{1, 1, 0, 1};
  const AttentionTopology topo = make_topology(3, h, t, false);
  EXPECT_EQ(topo.in_degree, (std::vector<double>{1, 3, 0}));
  for (Index j = 0; j < 3; ++j) {
    for (std::size_t p = topo.in_ptr[j]; p < topo.in_ptr[j + 1]; ++p) {
      EXPECT_EQ(topo.tail[topo.in_edges[p]], j);
    }
  }
  const AttentionTopology rev = make_topology(3, h, t, true);
  EXPECT_EQ(rev.head, t);
  EXPECT_EQ(rev.in_degree, (std::vector<double>{1, 1, 2}));
  EXPECT_THROW(make_topology(2, h, t, false), Error);
}

TEST(Topology, FlipIsAnInvolution) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = random_edges(7, 15, rng);
    const AttentionTopology topo = make_topology(7, r.heads, r.tails, false);
    const AttentionTopology once = flip(topo);
    const AttentionTopology twice = flip(once);
    EXPECT_EQ(once.head, topo.tail);
    EXPECT_TRUE(once.reversed);
    EXPECT_EQ(twice.head, topo.head);
    EXPECT_EQ(twice.tail, topo.tail);
    EXPECT_EQ(twice.in_ptr, topo.in_ptr);
    EXPECT_EQ(twice.in_edges, topo.in_edges);
    EXPECT_EQ(twice.in_degree, topo.in_degree);
    EXPECT_EQ(twice.reversed, topo.reversed);
  }
}

TEST(MessageMask, AllKeepEqualsAdjacency) {
  Rng rng(2);
  const auto r = random_edges(6, 10, rng);
  const AttentionTopology topo = make_topology(6, r.heads, r.tails, false);
  Mat adj = Mat::Zero(6, 6);
  for (std::size_t e = 0; e < r.heads.size(); ++e) adj(r.heads[e], r.tails[e]) = 1.0;
  const DropKeyMask keep = sample_dropkey(10, 3, 0.0, Mode::train, rng);
  EXPECT_TRUE(keep.all_keep());
  for (const Mat& m : message_mask(topo, keep, 3)) EXPECT_EQ(m, adj);
}

TEST(DropKey, EvalAndZeroRateKeepEverything) {
  Rng rng(3);
  EXPECT_TRUE(sample_dropkey(5, 4, 0.5, Mode::eval, rng).all_keep());
  EXPECT_TRUE(sample_dropkey(5, 4, 0.0, Mode::train, rng).all_keep());
  EXPECT_THROW(sample_dropkey(5, 4, 1.0, Mode::train, rng), Error);
  EXPECT_THROW(sample_dropkey(5, 4, -0.1, Mode::train, rng), Error);
}

TEST(DropKey, DropFractionMatchesRate) {
  Rng rng(4);
  const DropKeyMask m = sample_dropkey(2000, 50, 0.3, Mode::train, rng);
  const double dropped = 1.0 - m.keep.mean();
  // binomial with 1e5 trials, sd ~ 1.45e-3
  EXPECT_NEAR(dropped, 0.3, 0.01);
}

TEST(DropKey, DroppedEdgeIsRemovedFromMask) {
  const std::vector<Index> h{0, 1}, t{1, 0};
  const AttentionTopology topo = make_topology(2, h, t, false);
  DropKeyMask m;
  m.rate = 0.5;
  m.keep = Mat::Ones(2, 2);
  m.keep(0, 1) = 0.0;
  const auto masks = message_mask(topo, m, 2);
  EXPECT_EQ(masks[0](0, 1), 1.0);
  EXPECT_EQ(masks[1](0, 1), 0.0);
  EXPECT_EQ(masks[1](1, 0), 1.0);
}

TEST(Attention, WeightsSumToOneWithoutEpsilon) {
  Rng rng(5);
  LayerConfig cfg;
  cfg.attn_eps = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto r = random_edges(n, 3 * n, rng);
    const AttentionTopology topo = make_topology(n, r.heads, r.tails, trial % 2 == 1);
    AttentionLayer layer = make_layer(4, rng, cfg);
    const Mat e = randn(static_cast<Eigen::Index>(r.heads.size()), 4, rng, 2.0);
    const Mat a = attention_weights(layer.attention_scores(e, topo, {}), topo, 0.0);
    for (Index j = 0; j < n; ++j) {
      if (topo.in_degree[j] == 0) continue;
      Mat sum = Mat::Zero(1, 4);
      for (std::size_t p = topo.in_ptr[j]; p < topo.in_ptr[j + 1]; ++p) sum += a.row(topo.in_edges[p]);
      for (int c = 0; c < 4; ++c) EXPECT_NEAR(sum(0, c), 1.0, 1e-12);
    }
  }
}

TEST(Attention, ScoresMatchFormula) {
  Rng rng(6);
  const auto r = random_edges(5, 12, rng);
  const AttentionTopology topo = make_topology(5, r.heads, r.tails, false);
  AttentionLayer layer = make_layer(3, rng);
  const Mat e = randn(12, 3, rng);
  DropKeyMask mask;
  mask.rate = 0.4;
  mask.keep = Mat::Ones(12, 3);
  mask.keep(2, 1) = 0.0;
  const Mat s = layer.attention_scores(e, topo, mask);
  const Mat z = layer.w_attn.forward(e);
  for (Eigen::Index k = 0; k < 12; ++k) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double expect = mask.keep(k, c) * topo.in_degree[topo.tail[k]] * std::exp(z(k, c));
      EXPECT_NEAR(s(k, c), expect, 1e-12 * std::max(1.0, expect));
    }
  }
  EXPECT_EQ(s(2, 1), 0.0);
}

TEST(Attention, LogitClampKeepsOutputFinite) {
  Rng rng(7);
  const auto r = random_edges(4, 8, rng);
  const AttentionTopology topo = make_topology(4, r.heads, r.tails, false);
  AttentionLayer layer = make_layer(3, rng);
  layer.w_attn.bias.value.setConstant(5000.0);
  AttentionLayer::Cache c;
  const auto [x, e] = layer.forward(randn(4, 3, rng), randn(8, 3, rng), topo, {}, Mode::train, c);
  EXPECT_TRUE(x.allFinite());
  EXPECT_TRUE(e.allFinite());
  EXPECT_LE(c.logits.maxCoeff(), 5000.0 + 100.0);
  EXPECT_TRUE(c.exp_logits.allFinite());
}

TEST(Attention, NonFiniteInputIsNumericError) {
  Rng rng(8);
  const auto r = random_edges(3, 4, rng);
  const AttentionTopology topo = make_topology(3, r.heads, r.tails, false);
  AttentionLayer layer = make_layer(2, rng);
  Mat x = randn(3, 2, rng);
  x(1, 0) = std::nan("");
  AttentionLayer::Cache c;
  try {
    layer.forward(x, randn(4, 2, rng), topo, {}, Mode::train, c);
    FAIL() << "expected a numeric error";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::numeric);
  }
}

TEST(NormTest, PnvUnitQuadraticMean) {
  Rng rng(9);
  Norm norm(NormKind::pnv, 4);
  norm.gain.value.setOnes();
  norm.running_sq_mean.setOnes();
  Norm::Cache c;
  const Mat y = norm.forward(randn(30, 4, rng, 3.0), Mode::train, c);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(y.col(j).squaredNorm() / 30.0, 1.0, 1e-4);
}

TEST(NormTest, PnvFloorOnDeadChannel) {
  Norm norm(NormKind::pnv, 2);
  norm.gain.value.setOnes();
  Mat u = Mat::Zero(3, 2);
  u.col(0) << 1e-4, -1e-4, 0.0;
  u.col(1) << 1.0, 2.0, 3.0;
  Norm::Cache c;
  const Mat y = norm.forward(u, Mode::train, c);
  EXPECT_NEAR(y(0, 0), 1e-4 / std::sqrt(Norm::kEps), 1e-12);
  EXPECT_EQ(c.above_floor(0, 0), 0.0);
  EXPECT_EQ(c.above_floor(0, 1), 1.0);
}

TEST(NormTest, PnvEvalUsesRunningEstimate) {
  Norm norm(NormKind::pnv, 1);
  norm.gain.value.setConstant(2.0);
  norm.running_sq_mean.setConstant(4.0);
  Mat u(2, 1);
  u << 1.0, -3.0;
  Norm::Cache c;
  const Mat y = norm.forward(u, Mode::eval, c);
  EXPECT_DOUBLE_EQ(y(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(y(1, 0), -3.0);
  EXPECT_DOUBLE_EQ(norm.running_sq_mean(0, 0), 4.0);
}

TEST(NormTest, LayerNormRowsAreStandardized) {
  Rng rng(10);
  Norm norm(NormKind::layernorm, 6);
  norm.gain.value.setOnes();
  Norm::Cache c;
  const Mat y = norm.forward(randn(5, 6, rng, 2.0), Mode::train, c);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(y.row(i).mean(), 0.0, 1e-12);
    EXPECT_NEAR(y.row(i).squaredNorm() / 6.0, 1.0, 1e-4);
  }
}

TEST(NormTest, ParseKinds) {
  EXPECT_EQ(parse_norm_kind("pnv"), NormKind::pnv);
  EXPECT_EQ(parse_norm_kind("layernorm"), NormKind::layernorm);
  EXPECT_THROW(parse_norm_kind("batch"), Error);
}

TEST(DeepNorm, ScalesForFortyNineLayers) {
  EXPECT_NEAR(deepnorm_alpha(49), std::pow(98.0, 0.25), 1e-15);
  EXPECT_NEAR(deepnorm_beta(49), std::pow(392.0, -0.25), 1e-15);
  EXPECT_NEAR(deepnorm_alpha(8), 2.0, 1e-15);
  EXPECT_NEAR(deepnorm_beta(2), 0.5, 1e-15);  // 16^(-1/4)
  EXPECT_THROW(deepnorm_alpha(0), Error);
}

struct GradCase {
  NormKind norm;
  Activation act;
  bool log_length;
  bool reversed;
  double dropkey;
};

class LayerGradient : public ::testing::TestWithParam<GradCase> {};

TEST_P(LayerGradient, MatchesFiniteDifferences) {
  const GradCase gc = GetParam();
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    LayerConfig cfg;
    cfg.norm = gc.norm;
    cfg.activation = gc.act;
    cfg.log_length_scaling = gc.log_length;
    cfg.alpha = deepnorm_alpha(6);
    AttentionLayer layer = make_layer(3, rng, cfg);
    const auto r = random_edges(5, 11, rng);
    const AttentionTopology topo = make_topology(5, r.heads, r.tails, gc.reversed);
    const DropKeyMask mask = sample_dropkey(11, 3, gc.dropkey, Mode::train, rng);
    const GradCheckReport rep =
        grad_check_layer(layer, randn(5, 3, rng), randn(11, 3, rng), topo, mask,
                         randn(5, 3, rng), randn(11, 3, rng), 1e-5);
    for (const auto& b : rep.blocks) EXPECT_LT(b.max_rel_error, 1e-5) << b.name;
    EXPECT_TRUE(rep.passed);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Variants, LayerGradient,
    ::testing::Values(GradCase{NormKind::pnv, Activation::silu, false, false, 0.0},
                      GradCase{NormKind::pnv, Activation::silu, false, true, 0.3},
                      GradCase{NormKind::pnv, Activation::mish, true, false, 0.0},
                      GradCase{NormKind::pnv, Activation::relu, false, true, 0.0},
                      GradCase{NormKind::layernorm, Activation::silu, true, true, 0.2},
                      GradCase{NormKind::layernorm, Activation::mish, false, false, 0.0}));

TEST(LayerEquivariance, NodeAndEdgePermutations) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 10;
    const std::size_t m = 2 * n + 1;
    const auto r = random_edges(n, m, rng);
    AttentionLayer layer = make_layer(4, rng);
    const Mat x = randn(static_cast<Eigen::Index>(n), 4, rng);
    const Mat e = randn(static_cast<Eigen::Index>(m), 4, rng);
    const DropKeyMask mask = sample_dropkey(m, 4, 0.25, Mode::train, rng);

    std::vector<Index> pi(n), sigma(m);
    std::iota(pi.begin(), pi.end(), 0);
    std::iota(sigma.begin(), sigma.end(), 0);
    std::shuffle(pi.begin(), pi.end(), rng);
    std::shuffle(sigma.begin(), sigma.end(), rng);

    // new edge q is old edge sigma[q]; old node i becomes pi[i]
    std::vector<Index> h2(m), t2(m);
    Mat x2(x.rows(), x.cols()), e2(e.rows(), e.cols());
    DropKeyMask mask2 = mask;
    for (std::size_t i = 0; i < n; ++i) x2.row(pi[i]) = x.row(i);
    for (std::size_t q = 0; q < m; ++q) {
      h2[q] = pi[r.heads[sigma[q]]];
      t2[q] = pi[r.tails[sigma[q]]];
      e2.row(q) = e.row(sigma[q]);
      mask2.keep.row(q) = mask.keep.row(sigma[q]);
    }
    const bool rev = trial % 2 == 1;
    AttentionLayer copy = layer;
    AttentionLayer::Cache c1, c2;
    const auto [xo, eo] =
        layer.forward(x, e, make_topology(n, r.heads, r.tails, rev), mask, Mode::train, c1);
    const auto [xo2, eo2] = copy.forward(x2, e2, make_topology(n, h2, t2, rev), mask2, Mode::train, c2);
    const double scale = std::max(xo.cwiseAbs().maxCoeff(), eo.cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT((xo2.row(pi[i]) - xo.row(i)).cwiseAbs().maxCoeff(), 1e-12 * scale);
    }
    for (std::size_t q = 0; q < m; ++q) {
      EXPECT_LT((eo2.row(q) - eo.row(sigma[q])).cwiseAbs().maxCoeff(), 1e-12 * scale);
    }
  }
}

TEST(LayerOrientation, ReversedEqualsSwappedEndpoints) {
  Rng rng(13);
  const auto r = random_edges(6, 13, rng);
  AttentionLayer layer = make_layer(3, rng);
  AttentionLayer copy = layer;
  const Mat x = randn(6, 3, rng), e = randn(13, 3, rng);
  AttentionLayer::Cache c1, c2;
  const auto a = layer.forward(x, e, make_topology(6, r.heads, r.tails, true), {}, Mode::train, c1);
  const auto b = copy.forward(x, e, make_topology(6, r.tails, r.heads, false), {}, Mode::train, c2);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

}  // namespace
}  // namespace grass
