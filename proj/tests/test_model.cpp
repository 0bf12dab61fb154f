// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "grass/error.hpp"
#include "grass/gradcheck.hpp"
#include "grass/model.hpp"
#include "test_util.hpp"

namespace grass {
namespace {

using testing::randn;

struct Sampled {
  GraphPtr g;
  GraphEncoding enc;
  RewiredGraph h;
};

Sampled sample(std::size_t n, const Config& cfg, Rng& rng) {
  Sampled s;
  s.g = std::make_shared<const Graph>(testing::random_molecule(n, rng));
  s.enc = encode_graph(*s.g, cfg.encode.k);
  RewireConfig rc;
  rc.r = cfg.rewire.r;
  s.h = rewire(s.g, rc, rng);
  return s;
}

// Random nonzero values everywhere so no term is trivially inactive.
void randomize(GrassModel& m, Rng& rng) {
  m.visit([&](const std::string&, Param& p) { p.value = randn(p.value.rows(), p.value.cols(), rng, 0.4); });
}

TEST(Pool, MatchesSegmentSums) {
  Rng rng(1);
  const Config cfg = testing::small_config();
  std::vector<Sampled> graphs;
  for (std::size_t n : {3, 6, 5}) graphs.push_back(sample(n, cfg, rng));
  std::vector<RewiredGraph> hs;
  std::vector<const GraphEncoding*> encs;
  for (auto& s : graphs) {
    hs.push_back(s.h);
    encs.push_back(&s.enc);
  }
  const ModelInput in = assemble_input(hs, encs);
  const Mat x = randn(static_cast<Eigen::Index>(in.num_nodes), 4, rng);
  const Mat e = randn(static_cast<Eigen::Index>(in.num_edges()), 4, rng);
  const Mat sum = pool(in, x, e, PoolKind::sum);
  const Mat mean = pool(in, x, e, PoolKind::mean);
  ASSERT_EQ(sum.rows(), 3);
  ASSERT_EQ(sum.cols(), 12);
  for (Index gi = 0; gi < 3; ++gi) {
    Mat expect = Mat::Zero(1, 12);
    double counts[3] = {0, 0, 0};
    for (std::size_t i = 0; i < in.num_nodes; ++i) {
      if (in.node_graph[i] != gi) continue;
      expect.block(0, 0, 1, 4) += x.row(i);
      counts[0] += 1;
    }
    for (std::size_t k = 0; k < in.num_edges(); ++k) {
      if (in.edge_graph[k] != gi) continue;
      const int seg = in.origin[k] == EdgeOrigin::original ? 1 : 2;
      expect.block(0, 4 * seg, 1, 4) += e.row(k);
      counts[seg] += 1;
    }
    EXPECT_LT((sum.row(gi) - expect).cwiseAbs().maxCoeff(), 1e-12);
    for (int seg = 0; seg < 3; ++seg) {
      const Mat m = counts[seg] > 0 ? Mat(expect.block(0, 4 * seg, 1, 4) / counts[seg]) : Mat(Mat::Zero(1, 4));
      EXPECT_LT((mean.block(gi, 4 * seg, 1, 4) - m).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Pool, NoRewiringLeavesThirdSegmentZero) {
  Rng rng(2);
  Config cfg = testing::small_config();
  cfg.rewire.r = 0;
  const Sampled s = sample(6, cfg, rng);
  EXPECT_EQ(s.h.num_added_edges(), 0u);
  const ModelInput in = assemble_input(s.h, s.enc);
  GrassModel m = init_params(cfg, 3);
  Rng dk(4);
  const ModelOutput out = m.forward(in, Mode::train, dk);
  ASSERT_EQ(out.pooled.cols(), 3 * 4);
  EXPECT_EQ(out.pooled.block(0, 8, 1, 4), Mat::Zero(1, 4));
}

TEST(Model, SingleNodeGraph) {
  Config cfg = testing::small_config();
  auto g = std::make_shared<const Graph>(build_graph(1, {}, Mat::Zero(1, 1), Mat::Zero(0, 1), false));
  const GraphEncoding enc = encode_graph(*g, cfg.encode.k);
  GrassModel m = init_params(cfg, 1);
  Rng rw(1), dk(2);
  RewireConfig rc;
  rc.r = 2;
  const ModelOutput out = forward(m, g, enc, rc, Mode::eval, rw, dk);
  EXPECT_EQ(out.predictions.rows(), 1);
  EXPECT_TRUE(out.predictions.allFinite());
}

TEST(Model, EdgelessGraphBatchesWithOthers) {
  Rng rng(11);
  const Config cfg = testing::small_config();
  auto lone = std::make_shared<const Graph>(build_graph(1, {}, Mat::Zero(1, 1), Mat(), false));
  const GraphEncoding lone_enc = encode_graph(*lone, cfg.encode.k);
  const Sampled s = sample(5, cfg, rng);
  const std::vector<RewiredGraph> hs{RewiredGraph(lone, {}), s.h};
  const std::vector<const GraphEncoding*> encs{&lone_enc, &s.enc};
  const ModelInput in = assemble_input(hs, encs);
  EXPECT_EQ(in.edge_feat.cols(), 1);
  GrassModel m = init_params(cfg, 1);
  Rng dk(1);
  EXPECT_TRUE(m.forward(in, Mode::train, dk).predictions.allFinite());
}

TEST(Model, HeadWidths) {
  Config cfg = testing::small_config(2, 6);
  GrassModel m = init_params(cfg, 1);
  EXPECT_EQ(m.head_hidden.in_dim(), 18);
  cfg.model.task = Task::node_classification;
  cfg.model.out_dim = 3;
  GrassModel n = init_params(cfg, 1);
  EXPECT_EQ(n.head_hidden.in_dim(), 6);
  EXPECT_EQ(n.head_out.out_dim(), 3);
}

TEST(Model, ZeroParametersGiveHeadBias) {
  Rng rng(5);
  const Config cfg = testing::small_config();
  const Sampled s = sample(5, cfg, rng);
  GrassModel m = init_params(cfg, 2);
  m.visit([](const std::string&, Param& p) { p.value.setZero(); });
  m.head_out.bias.value.setConstant(1.25);
  Rng dk(1);
  const ModelOutput out = m.forward(assemble_input(s.h, s.enc), Mode::train, dk);
  EXPECT_DOUBLE_EQ(out.predictions(0, 0), 1.25);
}

TEST(Model, NodeTaskPredictsPerNode) {
  Rng rng(6);
  Config cfg = testing::small_config();
  cfg.model.task = Task::node_classification;
  cfg.model.out_dim = 4;
  const Sampled s = sample(7, cfg, rng);
  GrassModel m = init_params(cfg, 2);
  Rng dk(1);
  const ModelOutput out = m.forward(assemble_input(s.h, s.enc), Mode::train, dk);
  EXPECT_EQ(out.predictions.rows(), 7);
  EXPECT_EQ(out.predictions.cols(), 4);
  EXPECT_EQ(out.pooled.size(), 0);
}

TEST(Model, InitAndForwardAreDeterministic) {
  Rng rng(7);
  Config cfg = testing::small_config();
  cfg.dropkey_rate = 0.3;
  const Sampled s = sample(6, cfg, rng);
  GrassModel a = init_params(cfg, 99), b = init_params(cfg, 99), c = init_params(cfg, 100);
  std::vector<Mat> va, vb, vc;
  a.visit([&](const std::string&, Param& p) { va.push_back(p.value); });
  b.visit([&](const std::string&, Param& p) { vb.push_back(p.value); });
  c.visit([&](const std::string&, Param& p) { vc.push_back(p.value); });
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  const ModelInput in = assemble_input(s.h, s.enc);
  Rng d1(3), d2(3);
  EXPECT_EQ(a.forward(in, Mode::train, d1).predictions, b.forward(in, Mode::train, d2).predictions);
}

TEST(Model, LayerParity) {
  Config cfg = testing::small_config(4);
  GrassModel m = init_params(cfg, 1);
  EXPECT_FALSE(m.layer_reversed(1));
  EXPECT_TRUE(m.layer_reversed(2));
  EXPECT_FALSE(m.layer_reversed(3));
  EXPECT_TRUE(m.layer_reversed(4));
  cfg.edge_flip = false;
  GrassModel f = init_params(cfg, 1);
  for (std::size_t l = 1; l <= 4; ++l) EXPECT_FALSE(f.layer_reversed(l));
}

TEST(Model, ZincPresetParameterCount) {
  const Config cfg = load_config(std::string(GRASS_CONFIG_DIR) + "/zinc.json");
  GrassModel m = init_params(cfg, 0);
  const double count = static_cast<double>(m.parameter_count());
  EXPECT_NEAR(count / 499777.0, 1.0, 0.02) << count;
}

TEST(Model, InvalidDimensionsThrow) {
  Config cfg = testing::small_config();
  cfg.model.dim = 0;
  EXPECT_THROW(init_params(cfg, 0), Error);
  cfg = testing::small_config();
  cfg.model.layers = 0;
  EXPECT_THROW(init_params(cfg, 0), Error);
}

TEST(Model, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  Config cfg = testing::small_config(3, 3, 3);
  cfg.dropkey_rate = 0.2;
  for (int trial = 0; trial < 3; ++trial) {
    const Sampled a = sample(4, cfg, rng), b = sample(5, cfg, rng);
    const std::vector<RewiredGraph> hs{a.h, b.h};
    const std::vector<const GraphEncoding*> encs{&a.enc, &b.enc};
    const ModelInput in = assemble_input(hs, encs);
    GrassModel m = init_params(cfg, 10 + trial);
    randomize(m, rng);
    const Mat probe = randn(2, 1, rng);
    const GradCheckReport ok = grad_check_model(m, in, 5, probe, 1e-5);
    EXPECT_TRUE(ok.passed) << ok.max_rel_error;
    const GradCheckReport bad = grad_check_model(m, in, 5, probe, 1e-5, 1e-6, true);
    EXPECT_FALSE(bad.passed);
  }
}

TEST(Model, PermutationEquivariance) {
  Rng rng(9);
  Config cfg = testing::small_config(3, 4, 4);
  cfg.dropkey_rate = 0.25;
  cfg.model.task = Task::node_classification;
  cfg.model.out_dim = 2;
  for (int trial = 0; trial < 10; ++trial) {
    const Sampled s = sample(3 + trial % 8, cfg, rng);
    const Permutation p = Permutation::random(s.g->num_nodes(), rng);
    const RewiredGraph hp = permute_nodes(s.h, p);
    const GraphEncoding ep = encode_graph(hp.base(), cfg.encode.k);
    GrassModel m = init_params(cfg, 1);
    randomize(m, rng);
    GrassModel m2 = m;
    Rng d1(trial), d2(trial);
    const ModelOutput o = m.forward(assemble_input(s.h, s.enc), Mode::train, d1);
    const ModelOutput op = m2.forward(assemble_input(hp, ep), Mode::train, d2);
    const double scale = o.predictions.cwiseAbs().maxCoeff();
    EXPECT_LT((permute_rows(o.predictions, p) - op.predictions).cwiseAbs().maxCoeff(), 1e-10 * scale);
    EXPECT_LT((o.edge_out - op.edge_out).cwiseAbs().maxCoeff(), 1e-10 * scale + 1e-12);
  }
}

TEST(Model, MismatchedEncodingRejected) {
  Rng rng(10);
  const Config cfg = testing::small_config();
  const Sampled s = sample(6, cfg, rng);
  const GraphEncoding other = encode_graph(testing::random_molecule(4, rng), cfg.encode.k);
  EXPECT_THROW(assemble_input(s.h, other), Error);
}

}  // namespace
}  // namespace grass
