// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/tensor.hpp"

#include <cmath>

#include "grass/error.hpp"

namespace grass {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation error";
    case ErrorKind::data: return "data error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::cache_invalid: return "cache invalid";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::usage: return "usage error";
  }
  return "error";
}

Mat Linear::forward(const Mat& x) const {
  Mat y = x * weight.value.transpose();
  y.rowwise() += bias.value.row(0);
  return y;
}

Mat Linear::backward(const Mat& x, const Mat& dy) {
  weight.grad.noalias() += dy.transpose() * x;
  bias.grad += dy.colwise().sum();
  return dy * weight.value;
}

void Linear::init(std::mt19937_64& rng, double gain) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, in_dim())));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value.data()[i] = gain * u(rng);
  bias.value.setZero();
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "silu" || name == "swish") return Activation::silu;
  if (name == "mish") return Activation::mish;
  fail(ErrorKind::validation, "unknown activation '" + std::string(name) + "'");
}

const char* to_string(Activation act) noexcept {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::silu: return "silu";
    case Activation::mish: return "mish";
  }
  return "?";
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }

}  // namespace

Mat activate(Activation act, const Mat& x) {
  switch (act) {
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::silu: return x.unaryExpr([](double v) { return v * sigmoid(v); });
    case Activation::mish:
      return x.unaryExpr([](double v) { return v * std::tanh(softplus(v)); });
  }
  return x;
}

Mat activate_grad(Activation act, const Mat& x) {
  switch (act) {
    case Activation::relu: return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::silu:
      return x.unaryExpr([](double v) {
        const double s = sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
    case Activation::mish:
      return x.unaryExpr([](double v) {
        const double t = std::tanh(softplus(v));
        return t + v * (1.0 - t * t) * sigmoid(v);
      });
  }
  return Mat::Ones(x.rows(), x.cols());
}

Mat gather_rows(const Mat& src, std::span<const Index> rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = src.row(rows[i]);
  return out;
}

void scatter_add_rows(Mat& dst, std::span<const Index> rows, const Mat& src) {
  for (std::size_t i = 0; i < rows.size(); ++i) dst.row(rows[i]) += src.row(i);
}

}  // namespace grass
