// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "grass/checkpoint.hpp"
#include "grass/error.hpp"
#include "grass/synth.hpp"
#include "grass/train.hpp"
#include "test_util.hpp"

namespace grass {
namespace {

Config molecule_config() {
  Config cfg = testing::small_config(2, 4, 4);
  cfg.model.node_input.vocab = 28;
  cfg.model.edge_input.vocab = 4;
  cfg.train.epochs = 3;
  cfg.train.batch_size = 4;
  cfg.train.lr_peak = 1e-3;
  cfg.train.weight_decay = 0.01;
  cfg.dropkey_rate = 0.1;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Lion, HandComputedStep) {
  Mat p(1, 3), g(1, 3), m(1, 3);
  p << 1.0, -2.0, 0.5;
  g << 0.3, 0.0, -4.0;
  m << -1.0, 0.2, 0.1;
  optimizer_step(p, g, m, 0.1, 0.9, 0.99, 0.5);
  // update direction: sign(0.9 m + 0.1 g) = sign(-0.87, 0.18, -0.31)
  EXPECT_NEAR(p(0, 0), 1.0 - 0.1 * (-1.0 + 0.5 * 1.0), 1e-15);
  EXPECT_NEAR(p(0, 1), -2.0 - 0.1 * (1.0 + 0.5 * -2.0), 1e-15);
  EXPECT_NEAR(p(0, 2), 0.5 - 0.1 * (-1.0 + 0.5 * 0.5), 1e-15);
  EXPECT_NEAR(m(0, 0), 0.99 * -1.0 + 0.01 * 0.3, 1e-15);
  EXPECT_NEAR(m(0, 1), 0.99 * 0.2, 1e-15);
  EXPECT_NEAR(m(0, 2), 0.99 * 0.1 + 0.01 * -4.0, 1e-15);
}

TEST(Lion, ZeroDirectionOnlyDecays) {
  Mat p = Mat::Constant(1, 1, 2.0), g = Mat::Zero(1, 1), m = Mat::Zero(1, 1);
  optimizer_step(p, g, m, 0.1, 0.9, 0.99, 0.0);
  EXPECT_EQ(p(0, 0), 2.0);
  optimizer_step(p, g, m, 0.1, 0.9, 0.99, 1.0);
  EXPECT_NEAR(p(0, 0), 1.8, 1e-15);
}

TEST(Lion, NonFiniteGradientLeavesStateIntact) {
  Mat p = Mat::Ones(1, 2), g(1, 2), m = Mat::Zero(1, 2);
  g << 1.0, std::nan("");
  try {
    optimizer_step(p, g, m, 0.1, 0.9, 0.99, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
  EXPECT_EQ(p, Mat::Ones(1, 2));
  EXPECT_EQ(m, Mat::Zero(1, 2));
}

TEST(Lion, ModelStepSkipsDecayOnBiases) {
  GrassModel m = init_params(testing::small_config(), 1);
  m.zero_grad();
  OptimizerState st;
  st.weight_decay = 1.0;
  const Mat bias = m.head_out.bias.value = Mat::Constant(1, 1, 3.0);
  const Mat w = m.head_out.weight.value;
  optimizer_step(m, st, 0.1);
  EXPECT_EQ(m.head_out.bias.value, bias);
  EXPECT_LT((m.head_out.weight.value - 0.9 * w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Schedule, EndpointsAndShape) {
  ScheduleConfig s;
  s.total_steps = 1000;
  s.warmup_ratio = 0.1;
  s.lr_init = 1e-7;
  s.lr_peak = 1e-3;
  s.lr_final = 1e-6;
  EXPECT_NEAR(lr_at(0, s), 1e-7, 1e-18);
  EXPECT_NEAR(lr_at(100, s), 1e-3, 1e-15);
  EXPECT_NEAR(lr_at(1000, s), 1e-6, 1e-15);
  EXPECT_NEAR(lr_at(50, s), 0.5 * (1e-7 + 1e-3), 1e-12);
  EXPECT_NEAR(lr_at(550, s), 0.5 * (1e-3 + 1e-6), 1e-12);
  for (std::size_t t = 1; t <= 1000; ++t) {
    if (t <= 100) EXPECT_GE(lr_at(t, s), lr_at(t - 1, s));
    else EXPECT_LE(lr_at(t, s), lr_at(t - 1, s));
    // cosine segments change by at most pi/2 * range / segment length per step
    EXPECT_LT(std::abs(lr_at(t, s) - lr_at(t - 1, s)), 1.6e-3 / 100.0);
  }
}

TEST(Schedule, Validation) {
  ScheduleConfig s;
  s.warmup_ratio = 1.5;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.lr_peak = -1.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Loss, MeanAbsoluteError) {
  Mat p(2, 1), t(2, 1);
  p << 1.0, 2.0;
  t << 0.5, 2.0;
  const LossResult r = loss(p, t, Task::graph_regression, 0.0);
  EXPECT_DOUBLE_EQ(r.loss, 0.25);
  EXPECT_DOUBLE_EQ(r.grad(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.grad(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(metric(p, t, Task::graph_regression), 0.25);
}

TEST(Loss, SmoothedCrossEntropy) {
  const auto q = smoothed_targets(0, 2, 0.1);
  EXPECT_DOUBLE_EQ(q[0], 0.95);
  EXPECT_DOUBLE_EQ(q[1], 0.05);
  Mat logits(1, 2), t(1, 1);
  logits << 2.0, 0.0;
  t << 0.0;
  const LossResult r = loss(logits, t, Task::graph_classification, 0.1);
  const double lse = std::log(std::exp(2.0) + 1.0);
  EXPECT_NEAR(r.loss, -(0.95 * (2.0 - lse) + 0.05 * (0.0 - lse)), 1e-12);
  const double p0 = std::exp(2.0) / (std::exp(2.0) + 1.0);
  EXPECT_NEAR(r.grad(0, 0), p0 - 0.95, 1e-12);
  EXPECT_NEAR(r.grad(0, 1), (1.0 - p0) - 0.05, 1e-12);
  EXPECT_DOUBLE_EQ(metric(logits, t, Task::graph_classification), 1.0);
}

TEST(Loss, InvalidClassIdRejected) {
  Mat logits = Mat::Zero(1, 3), t(1, 1);
  t << 3.0;
  EXPECT_THROW(loss(logits, t, Task::graph_classification, 0.0), Error);
  t << 1.5;
  EXPECT_THROW(loss(logits, t, Task::graph_classification, 0.0), Error);
}

TEST(Metric, Direction) {
  EXPECT_TRUE(metric_improves(Task::graph_regression, 0.1, 0.2));
  EXPECT_FALSE(metric_improves(Task::graph_regression, 0.3, 0.2));
  EXPECT_TRUE(metric_improves(Task::graph_classification, 0.8, 0.7));
}

class TrainLoop : public ::testing::Test {
 protected:
  void SetUp() override {
    ds_ = synthetic_molecules(12, 5);
    enc_ = compute_encodings(ds_, 4);
  }
  Dataset ds_;
  EncodingCache enc_;
};

TEST_F(TrainLoop, ZeroEpochsSavesInitialModel) {
  Config cfg = molecule_config();
  cfg.train.epochs = 0;
  const auto dir = testing::temp_dir("zero");
  TrainOptions opts;
  opts.out_dir = dir;
  opts.seed = 3;
  const TrainResult r = train_loop(cfg, all_of(ds_, enc_), std::nullopt, opts);
  EXPECT_EQ(r.epochs, 0u);
  GrassModel loaded = load_checkpoint(r.checkpoint);
  GrassModel fresh = init_params(cfg, 3);
  std::vector<Mat> a, b;
  loaded.visit([&](const std::string&, Param& p) { a.push_back(p.value); });
  fresh.visit([&](const std::string&, Param& p) { b.push_back(p.value); });
  EXPECT_EQ(a, b);
  std::filesystem::remove_all(dir);
}

TEST_F(TrainLoop, ReplayIsBitIdentical) {
  const Config cfg = molecule_config();
  const LabeledData all = all_of(ds_, enc_);
  LabeledData train = all, val = all;
  train.indices = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  val.indices = {9, 10, 11};
  std::string logs[2], ckpts[2];
  for (int run = 0; run < 2; ++run) {
    const auto dir = testing::temp_dir("replay");
    TrainOptions opts;
    opts.out_dir = dir;
    opts.seed = 17;
    opts.record_wallclock = false;
    opts.prefetch = run == 0;
    const TrainResult r = train_loop(cfg, train, val, opts);
    EXPECT_TRUE(r.has_val);
    logs[run] = slurp(r.metric_log);
    ckpts[run] = slurp(r.checkpoint);
    std::filesystem::remove_all(dir);
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_EQ(ckpts[0], ckpts[1]);
  EXPECT_NE(logs[0].find("epoch,split,loss,metric,lr,wallclock_s"), std::string::npos);
}

TEST_F(TrainLoop, BatchSeedsDependOnPosition) {
  const Config cfg = molecule_config();
  const LabeledData all = all_of(ds_, enc_);
  const std::vector<std::size_t> members{0, 1};
  const Batch a = make_batch(all, members, cfg, 1, Stream::rewire, 0, 0);
  const Batch b = make_batch(all, members, cfg, 1, Stream::rewire, 0, 0);
  const Batch c = make_batch(all, members, cfg, 1, Stream::rewire, 1, 0);
  EXPECT_EQ(a.input.head, b.input.head);
  EXPECT_NE(a.input.head, c.input.head);
  EXPECT_EQ(a.targets.rows(), 2);
}

TEST_F(TrainLoop, MeanPredictorBaseline) {
  const Config cfg = molecule_config();
  const LabeledData all = all_of(ds_, enc_);
  const Mat mean = mean_target(all, cfg);
  double mu = 0.0;
  for (const Sample& s : ds_.samples) mu += s.target[0];
  mu /= static_cast<double>(ds_.size());
  EXPECT_NEAR(mean(0, 0), mu, 1e-12);
  double mae = 0.0;
  for (const Sample& s : ds_.samples) mae += std::abs(s.target[0] - mu);
  EXPECT_NEAR(mean_predictor_mae(all, mean, cfg), mae / static_cast<double>(ds_.size()), 1e-12);
}

TEST_F(TrainLoop, EvaluateIsSeedDeterministic) {
  const Config cfg = molecule_config();
  GrassModel m = init_params(cfg, 1);
  const LabeledData all = all_of(ds_, enc_);
  EXPECT_EQ(evaluate(m, all, 4).metric, evaluate(m, all, 4).metric);
  EXPECT_NE(evaluate(m, all, 4).metric, evaluate(m, all, 5).metric);
}

TEST_F(TrainLoop, CacheSizeMismatchIsCacheError) {
  EncodingCache small = enc_;
  small.graphs.pop_back();
  try {
    all_of(ds_, small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cache_invalid);
  }
}

}  // namespace
}  // namespace grass
