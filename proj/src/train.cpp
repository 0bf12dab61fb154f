// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <numbers>
#include <numeric>

#include "grass/checkpoint.hpp"
#include "grass/error.hpp"

namespace grass {

void optimizer_step(Mat& param, const Mat& grad, Mat& momentum, double lr, double beta1,
                    double beta2, double weight_decay) {
  require(param.rows() == grad.rows() && param.cols() == grad.cols() &&
              param.rows() == momentum.rows() && param.cols() == momentum.cols(),
          "optimizer shapes do not match");
  if (!grad.allFinite()) fail(ErrorKind::numeric, "non-finite gradient; step aborted");
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    double& p = param.data()[i];
    double& m = momentum.data()[i];
    const double g = grad.data()[i];
    const double c = beta1 * m + (1.0 - beta1) * g;
    const double sign = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
    p -= lr * (sign + weight_decay * p);
    m = beta2 * m + (1.0 - beta2) * g;
  }
}

void optimizer_step(GrassModel& model, OptimizerState& state, double lr) {
  model.visit([&](const std::string& name, Param& p) {
    if (!p.grad.allFinite()) fail(ErrorKind::numeric, "non-finite gradient in '" + name + "'; step aborted");
  });
  model.visit([&](const std::string& name, Param& p) {
    auto [it, fresh] = state.momentum.try_emplace(name);
    if (fresh) it->second = Mat::Zero(p.value.rows(), p.value.cols());
    optimizer_step(p.value, p.grad, it->second, lr, state.beta1, state.beta2,
                   p.decay ? state.weight_decay : 0.0);
  });
}

void ScheduleConfig::validate() const {
  require(total_steps >= 1, "schedule needs at least one step");
  require(warmup_ratio > 0.0 && warmup_ratio < 1.0, "warmup_ratio must lie in (0, 1)");
  require(lr_init > 0.0 && lr_peak > 0.0 && lr_final > 0.0, "learning rates must be positive");
}

double lr_at(std::size_t step, const ScheduleConfig& cfg) {
  const double total = static_cast<double>(cfg.total_steps);
  const double s = std::min(static_cast<double>(step), total);
  const double warm = cfg.warmup_ratio * total;
  constexpr double pi = std::numbers::pi;
  if (s <= warm) {
    const double t = s / warm;
    return cfg.lr_init + (cfg.lr_peak - cfg.lr_init) * 0.5 * (1.0 - std::cos(pi * t));
  }
  const double t = (s - warm) / (total - warm);
  return cfg.lr_final + (cfg.lr_peak - cfg.lr_final) * 0.5 * (1.0 + std::cos(pi * t));
}

namespace {

std::size_t class_of(double v, std::size_t num_classes) {
  if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(num_classes)) {
    fail(ErrorKind::validation, "class index " + std::to_string(v) + " outside [0, " +
                                    std::to_string(num_classes) + ")");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<double> smoothed_targets(std::size_t cls, std::size_t num_classes, double smoothing) {
  require(num_classes >= 1 && cls < num_classes, "class index out of range");
  std::vector<double> q(num_classes, smoothing / static_cast<double>(num_classes));
  q[cls] += 1.0 - smoothing;
  return q;
}

LossResult loss(const Mat& pred, const Mat& targets, Task task, double smoothing) {
  LossResult res;
  if (task == Task::graph_regression) {
    require(pred.rows() == targets.rows() && pred.cols() == targets.cols(),
            "prediction and target shapes differ");
    require(pred.size() > 0, "empty predictions");
    const Mat diff = pred - targets;
    const double count = static_cast<double>(diff.size());
    res.loss = diff.cwiseAbs().sum() / count;
    res.grad = diff.unaryExpr([count](double d) { return (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / count; });
    return res;
  }
  require(pred.rows() == targets.rows() && targets.cols() >= 1, "prediction and target rows differ");
  require(pred.rows() > 0, "empty predictions");
  const auto num_classes = static_cast<std::size_t>(pred.cols());
  const double rows = static_cast<double>(pred.rows());
  res.grad.resize(pred.rows(), pred.cols());
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    const std::vector<double> q = smoothed_targets(class_of(targets(r, 0), num_classes), num_classes, smoothing);
    const double mx = pred.row(r).maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < pred.cols(); ++c) z += std::exp(pred(r, c) - mx);
    const double log_z = mx + std::log(z);
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const double log_p = pred(r, c) - log_z;
      res.loss -= q[c] * log_p;
      res.grad(r, c) = (std::exp(log_p) - q[c]) / rows;
    }
  }
  res.loss /= rows;
  return res;
}

double metric(const Mat& pred, const Mat& targets, Task task) {
  if (task == Task::graph_regression) {
    require(pred.rows() == targets.rows() && pred.cols() == targets.cols(), "shape mismatch");
    return (pred - targets).cwiseAbs().mean();
  }
  require(pred.rows() == targets.rows(), "shape mismatch");
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    Eigen::Index best;
    pred.row(r).maxCoeff(&best);
    hits += static_cast<std::size_t>(best) == class_of(targets(r, 0), static_cast<std::size_t>(pred.cols()));
  }
  return static_cast<double>(hits) / static_cast<double>(pred.rows());
}

bool metric_improves(Task task, double candidate, double best) {
  return task == Task::graph_regression ? candidate < best : candidate > best;
}

LabeledData all_of(const Dataset& ds, const EncodingCache& enc) {
  if (enc.graphs.size() != ds.size()) {
    fail(ErrorKind::cache_invalid, "cache holds " + std::to_string(enc.graphs.size()) +
                                       " graphs but the dataset has " + std::to_string(ds.size()));
  }
  LabeledData d{&ds, &enc, {}};
  d.indices.resize(ds.size());
  std::iota(d.indices.begin(), d.indices.end(), std::size_t{0});
  return d;
}

Mat stack_targets(const LabeledData& data, std::span<const std::size_t> members, const Config& cfg) {
  const Task task = cfg.model.task;
  if (task == Task::node_classification) {
    std::size_t rows = 0;
    for (std::size_t m : members) rows += data.data->samples[data.indices[m]].graph->num_nodes();
    Mat t(static_cast<Eigen::Index>(rows), 1);
    Eigen::Index r = 0;
    for (std::size_t m : members) {
      const Sample& s = data.data->samples[data.indices[m]];
      if (s.target.size() != s.graph->num_nodes()) {
        fail(ErrorKind::data, "node task needs one target per node");
      }
      for (double v : s.target) t(r++, 0) = v;
    }
    return t;
  }
  const std::size_t width = task == Task::graph_regression ? cfg.model.out_dim : 1;
  Mat t(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Sample& s = data.data->samples[data.indices[members[i]]];
    if (s.target.size() != width) {
      fail(ErrorKind::data, "target has " + std::to_string(s.target.size()) + " values, expected " +
                                std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = s.target[c];
  }
  return t;
}

Batch make_batch(const LabeledData& data, std::span<const std::size_t> members, const Config& cfg,
                 std::uint64_t seed, Stream stream, std::uint64_t epoch, std::uint64_t batch_index) {
  std::vector<RewiredGraph> graphs;
  std::vector<const GraphEncoding*> encs;
  graphs.reserve(members.size());
  encs.reserve(members.size());
  RewireConfig rc;
  rc.r = cfg.rewire.r;
  rc.retry_until_simple = cfg.rewire.retry_until_simple;
  for (std::size_t p = 0; p < members.size(); ++p) {
    const std::size_t idx = data.indices[members[p]];
    rc.seed = derive_seed(seed, {static_cast<std::uint64_t>(stream), epoch, batch_index, p});
    Rng rng(rc.seed);
    graphs.push_back(rewire(data.data->samples[idx].graph, rc, rng));
    encs.push_back(&data.encodings->graphs[idx]);
  }
  Batch b;
  b.input = assemble_input(graphs, encs);
  b.targets = stack_targets(data, members, cfg);
  return b;
}

EvalResult evaluate(GrassModel& model, const LabeledData& data, std::uint64_t seed,
                    std::size_t batch_size) {
  const Config& cfg = model.config();
  if (batch_size == 0) batch_size = cfg.train.batch_size;
  EvalResult res;
  res.samples = data.size();
  if (data.size() == 0) return res;
  std::vector<Mat> preds, targets;
  Rng dropkey = make_rng(seed, {static_cast<std::uint64_t>(Stream::eval_dropkey)});
  std::vector<std::size_t> members;
  for (std::size_t start = 0, b = 0; start < data.size(); start += batch_size, ++b) {
    members.clear();
    for (std::size_t i = start; i < std::min(start + batch_size, data.size()); ++i) members.push_back(i);
    Batch batch = make_batch(data, members, cfg, seed, Stream::eval_rewire, 0, b);
    preds.push_back(model.forward(batch.input, Mode::eval, dropkey).predictions);
    targets.push_back(std::move(batch.targets));
  }
  auto stack = [](const std::vector<Mat>& parts) {
    Eigen::Index rows = 0;
    for (const Mat& m : parts) rows += m.rows();
    Mat out(rows, parts[0].cols());
    Eigen::Index r = 0;
    for (const Mat& m : parts) {
      out.middleRows(r, m.rows()) = m;
      r += m.rows();
    }
    return out;
  };
  const Mat p = stack(preds), t = stack(targets);
  res.loss = loss(p, t, cfg.model.task, 0.0).loss;
  res.metric = metric(p, t, cfg.model.task);
  return res;
}

Mat mean_target(const LabeledData& data, const Config& cfg) {
  require(data.size() > 0, "mean of an empty dataset");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return stack_targets(data, all, cfg).colwise().mean();
}

double mean_predictor_mae(const LabeledData& data, const Mat& mean, const Config& cfg) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Mat t = stack_targets(data, all, cfg);
  return (t.rowwise() - mean.row(0)).cwiseAbs().mean();
}

bool deterministic_mode() {
  const char* v = std::getenv("GRASS_DETERMINISTIC");
  return v != nullptr && std::string(v) == "1";
}

TrainResult train_loop(const Config& cfg, const LabeledData& train,
                       const std::optional<LabeledData>& val, const TrainOptions& opts) {
  GrassModel model;
  return train_loop(cfg, train, val, opts, model);
}

TrainResult train_loop(const Config& cfg, const LabeledData& train,
                       const std::optional<LabeledData>& val, const TrainOptions& opts,
                       GrassModel& model) {
  cfg.validate();
  const bool deterministic = deterministic_mode();
  const bool prefetch = opts.prefetch && !deterministic;
  const bool wallclock = opts.record_wallclock && !deterministic;
  const auto t0 = std::chrono::steady_clock::now();

  std::filesystem::create_directories(opts.out_dir);
  TrainResult res;
  res.checkpoint = opts.out_dir / "best.ckpt";
  res.metric_log = opts.out_dir / "metrics.csv";
  res.has_val = val.has_value() && val->size() > 0;

  std::ofstream log(res.metric_log, std::ios::trunc);
  if (!log) fail(ErrorKind::io, "cannot write '" + res.metric_log.string() + "'");
  log << "epoch,split,loss,metric,lr,wallclock_s\n";

  model = init_params(cfg, opts.seed);
  const std::size_t epochs = cfg.train.epochs;
  if (epochs == 0) {
    save_checkpoint(res.checkpoint, model);
    return res;
  }
  require(train.size() > 0, "training set is empty");

  const std::size_t bs = cfg.train.batch_size;
  const std::size_t steps_per_epoch = (train.size() + bs - 1) / bs;
  ScheduleConfig sched;
  sched.total_steps = steps_per_epoch * epochs;
  sched.warmup_ratio = cfg.train.warmup_ratio;
  sched.lr_init = cfg.train.lr_init;
  sched.lr_peak = cfg.train.lr_peak;
  sched.lr_final = cfg.train.lr_final;
  sched.validate();

  OptimizerState opt;
  opt.beta1 = cfg.train.beta1;
  opt.beta2 = cfg.train.beta2;
  opt.weight_decay = cfg.train.weight_decay;

  auto write_row = [&](std::size_t epoch, const char* split, double l, double m, double lr) {
    const double secs = wallclock ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.3f\n", epoch, split, l, m, lr, secs);
    log << buf;
    log.flush();
  };

  std::vector<std::size_t> order(train.size());
  double best = 0.0;
  bool have_best = false;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_rng(opts.seed, {static_cast<std::uint64_t>(Stream::shuffle), epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    auto build = [&](std::size_t b) {
      const std::size_t lo = b * bs, hi = std::min(lo + bs, order.size());
      return make_batch(train, std::span<const std::size_t>(order.data() + lo, hi - lo), cfg,
                        opts.seed, Stream::rewire, epoch, b);
    };
    double loss_sum = 0.0, metric_sum = 0.0, weight = 0.0, lr = 0.0;
    std::future<Batch> next;
    if (prefetch) next = std::async(std::launch::async, build, 0);
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      Batch batch = prefetch ? next.get() : build(b);
      if (prefetch && b + 1 < steps_per_epoch) next = std::async(std::launch::async, build, b + 1);

      lr = lr_at(step, sched);
      Rng dropkey = make_rng(opts.seed, {static_cast<std::uint64_t>(Stream::dropkey), epoch, b});
      GrassModel::Cache cache;
      model.zero_grad();
      const ModelOutput out = model.forward(batch.input, Mode::train, dropkey, &cache);
      const LossResult lr_res = loss(out.predictions, batch.targets, cfg.model.task, cfg.train.label_smoothing);
      if (!std::isfinite(lr_res.loss)) fail(ErrorKind::numeric, "non-finite training loss");
      model.backward(batch.input, cache, lr_res.grad);
      optimizer_step(model, opt, lr);
      ++step;

      const double w = static_cast<double>(batch.targets.rows());
      loss_sum += lr_res.loss * w;
      metric_sum += metric(out.predictions, batch.targets, cfg.model.task) * w;
      weight += w;
    }
    res.final_train_loss = loss_sum / weight;
    const double train_metric = metric_sum / weight;
    write_row(epoch, "train", res.final_train_loss, train_metric, lr);

    double val_metric = train_metric;
    if (res.has_val) {
      const EvalResult ev =
          evaluate(model, *val, derive_seed(opts.seed, {static_cast<std::uint64_t>(Stream::eval_rewire), epoch}));
      val_metric = ev.metric;
      write_row(epoch, "val", ev.loss, ev.metric, lr);
      if (!have_best || metric_improves(cfg.model.task, ev.metric, best)) {
        best = ev.metric;
        have_best = true;
        save_checkpoint(res.checkpoint, model);
      }
    }
    res.epochs = epoch;
    if (opts.on_epoch) opts.on_epoch(epoch, train_metric, val_metric);
  }
  if (!res.has_val) save_checkpoint(res.checkpoint, model);
  res.best_val_metric = best;
  return res;
}

}  // namespace grass
