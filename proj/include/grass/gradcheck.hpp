// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "grass/layer.hpp"
#include "grass/model.hpp"

namespace grass {

struct BlockError {
  std::string name;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;  // against the report-wide floor
  double raw_rel_error = 0.0;  // against the block's own scale only
};

struct GradCheckReport {
  std::vector<BlockError> blocks;
  double max_rel_error = 0.0;
  bool passed = true;
};

/// Relative error of a block: max |analytic - numeric| divided by
/// max(max |analytic|, max |numeric|, floor).
double block_relative_error(const Mat& analytic, const Mat& numeric, double floor = 1e-8);

/// Blocks whose gradients are far below the largest one in the check are
/// dominated by finite-difference round-off; they are scored against this
/// fraction of the largest numeric gradient instead of their own scale.
inline constexpr double kGradFloorFraction = 1e-3;

/// Central differences of `loss` with respect to every entry of `value`.
Mat numeric_gradient(Mat& value, const std::function<double()>& loss, double step = 1e-6);

/// Scalar probe L = sum(Wx * x_out) + sum(We * e_out) through one layer in
/// train mode, with the DropKey mask held fixed. Checks parameters and both
/// inputs.
GradCheckReport grad_check_layer(AttentionLayer& layer, const Mat& x, const Mat& e,
                                 const AttentionTopology& topo, const DropKeyMask& mask,
                                 const Mat& probe_x, const Mat& probe_e, double tolerance,
                                 double step = 1e-6);

/// Same probe on the full model predictions, with fixed rewiring and masks.
/// `corrupt` adds a perturbation to one analytic gradient (negative control).
GradCheckReport grad_check_model(GrassModel& model, const ModelInput& input,
                                 std::uint64_t dropkey_seed, const Mat& probe, double tolerance,
                                 double step = 1e-6, bool corrupt = false);

}  // namespace grass
