// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace grass {

/// Row-major dense matrix. Rows index nodes or edges, columns index channels.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = std::uint32_t;

enum class Mode { train, eval };

/// A trainable tensor and its accumulated gradient. Vectors are 1 x n.
struct Param {
  Mat value;
  Mat grad;
  bool decay = true;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols, bool weight_decay = true)
      : value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)), decay(weight_decay) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

/// Affine map y = x W^T + b.
struct Linear {
  Param weight;
  Param bias;

  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out)
      : weight(out, in, true), bias(1, out, false) {}

  Eigen::Index in_dim() const { return weight.value.cols(); }
  Eigen::Index out_dim() const { return weight.value.rows(); }

  Mat forward(const Mat& x) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Mat backward(const Mat& x, const Mat& dy);
  /// Fan-in scaled uniform init, weights multiplied by `gain`; bias zero.
  void init(std::mt19937_64& rng, double gain = 1.0);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
};

enum class Activation { relu, silu, mish };

Activation parse_activation(std::string_view name);
const char* to_string(Activation act) noexcept;

Mat activate(Activation act, const Mat& x);
/// Elementwise derivative of the activation evaluated at x.
Mat activate_grad(Activation act, const Mat& x);

Mat gather_rows(const Mat& src, std::span<const Index> rows);
/// dst.row(rows[i]) += src.row(i)
void scatter_add_rows(Mat& dst, std::span<const Index> rows, const Mat& src);

inline Mat col_sum(const Mat& m) { return m.colwise().sum(); }

}  // namespace grass
