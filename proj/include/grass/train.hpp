// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grass/cache.hpp"
#include "grass/config.hpp"
#include "grass/dataset.hpp"
#include "grass/model.hpp"

namespace grass {

// ---------------------------------------------------------------------------
// Optimizer

/// Sign-momentum update with decoupled weight decay:
///   p <- p - lr * (sign(b1 m + (1 - b1) g) + wd p)
///   m <- b2 m + (1 - b2) g
/// Throws ErrorKind::numeric on non-finite gradients, leaving p and m intact.
void optimizer_step(Mat& param, const Mat& grad, Mat& momentum, double lr, double beta1,
                    double beta2, double weight_decay);

struct OptimizerState {
  double beta1 = 0.95;
  double beta2 = 0.98;
  double weight_decay = 0.0;
  std::map<std::string, Mat> momentum;
};

/// Applies one step to every parameter of the model. Weight decay only
/// touches parameters flagged for decay (weight matrices).
void optimizer_step(GrassModel& model, OptimizerState& state, double lr);

// ---------------------------------------------------------------------------
// Schedule

struct ScheduleConfig {
  std::size_t total_steps = 1;
  double warmup_ratio = 0.1;
  double lr_init = 1e-7;
  double lr_peak = 5e-4;
  double lr_final = 1e-7;

  void validate() const;
};

/// Cosine ramp lr_init -> lr_peak over the warmup, cosine anneal to
/// lr_final afterwards.
double lr_at(std::size_t step, const ScheduleConfig& cfg);

// ---------------------------------------------------------------------------
// Loss and metrics

struct LossResult {
  double loss = 0.0;
  Mat grad;  // dL/dpredictions
};

/// Regression: mean absolute error over all entries (subgradient 0 at 0).
/// Classification: cross-entropy against (1 - s) onehot + s / C, averaged
/// over rows; targets hold class ids in column 0.
LossResult loss(const Mat& predictions, const Mat& targets, Task task, double smoothing);

/// MAE for regression, accuracy for classification.
double metric(const Mat& predictions, const Mat& targets, Task task);
bool metric_improves(Task task, double candidate, double best);

/// Smoothed target distribution for one class id.
std::vector<double> smoothed_targets(std::size_t cls, std::size_t num_classes, double smoothing);

// ---------------------------------------------------------------------------
// Data feeding

/// A dataset paired with its precomputed encodings.
struct LabeledData {
  const Dataset* data = nullptr;
  const EncodingCache* encodings = nullptr;
  std::vector<std::size_t> indices;  // subset of data->samples

  std::size_t size() const noexcept { return indices.size(); }
};

LabeledData all_of(const Dataset& ds, const EncodingCache& enc);

struct Batch {
  ModelInput input;
  Mat targets;
};

/// Rewires each member with a seed derived from (seed, stream, epoch, batch,
/// position) and assembles the union.
Batch make_batch(const LabeledData& data, std::span<const std::size_t> members,
                 const Config& cfg, std::uint64_t seed, Stream stream, std::uint64_t epoch,
                 std::uint64_t batch_index);

Mat stack_targets(const LabeledData& data, std::span<const std::size_t> members,
                  const Config& cfg);

// ---------------------------------------------------------------------------
// Evaluation and training

struct EvalResult {
  double loss = 0.0;
  double metric = 0.0;
  std::size_t samples = 0;
};

/// Eval-mode pass over the data. Rewiring is sampled from `seed` on the
/// eval stream, so the same seed reproduces the same random graphs.
EvalResult evaluate(GrassModel& model, const LabeledData& data, std::uint64_t seed,
                    std::size_t batch_size = 0);

/// Mean of the training targets, per target column.
Mat mean_target(const LabeledData& data, const Config& cfg);
/// MAE of always predicting `mean` on `data`.
double mean_predictor_mae(const LabeledData& data, const Mat& mean, const Config& cfg);

struct TrainOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  /// Write real wall-clock seconds to the metric log; when false the column
  /// is 0 so logs are bit-identical across replays.
  bool record_wallclock = true;
  /// Prepare the next batch on a worker thread.
  bool prefetch = true;
  /// Optional per-epoch callback (epoch, train metric, val metric).
  std::function<void(std::size_t, double, double)> on_epoch;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path metric_log;
  std::size_t epochs = 0;
  double final_train_loss = 0.0;
  double best_val_metric = 0.0;
  bool has_val = false;
};

/// Writes <out_dir>/metrics.csv (epoch,split,loss,metric,lr,wallclock_s)
/// and <out_dir>/best.ckpt (best validation metric; last epoch without a
/// validation split; initial parameters with zero epochs).
TrainResult train_loop(const Config& cfg, const LabeledData& train,
                       const std::optional<LabeledData>& val, const TrainOptions& opts);

/// Same as train_loop but returns the trained model in memory as well.
TrainResult train_loop(const Config& cfg, const LabeledData& train,
                       const std::optional<LabeledData>& val, const TrainOptions& opts,
                       GrassModel& trained);

/// True when GRASS_DETERMINISTIC=1 is set in the environment.
bool deterministic_mode();

}  // namespace grass
