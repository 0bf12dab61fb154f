// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/gradcheck.hpp"

#include <algorithm>

namespace grass {

double block_relative_error(const Mat& analytic, const Mat& numeric, double floor) {
  if (analytic.size() == 0) return 0.0;
  const double diff = (analytic - numeric).cwiseAbs().maxCoeff();
  const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), floor, 1e-8});
  return diff / scale;
}

Mat numeric_gradient(Mat& value, const std::function<double()>& loss, double step) {
  Mat g(value.rows(), value.cols());
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    const double orig = value.data()[i];
    value.data()[i] = orig + step;
    const double up = loss();
    value.data()[i] = orig - step;
    const double down = loss();
    value.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * step);
  }
  return g;
}

namespace {

struct Collected {
  std::string name;
  Mat analytic, numeric;
};

GradCheckReport score(const std::vector<Collected>& parts, double tolerance) {
  double largest = 0.0;
  for (const auto& p : parts) {
    if (p.numeric.size()) largest = std::max(largest, p.numeric.cwiseAbs().maxCoeff());
  }
  const double floor = kGradFloorFraction * largest;
  GradCheckReport rep;
  for (const auto& p : parts) {
    BlockError b;
    b.name = p.name;
    b.max_abs_error = p.analytic.size() ? (p.analytic - p.numeric).cwiseAbs().maxCoeff() : 0.0;
    b.max_rel_error = block_relative_error(p.analytic, p.numeric, floor);
    b.raw_rel_error = block_relative_error(p.analytic, p.numeric);
    rep.max_rel_error = std::max(rep.max_rel_error, b.max_rel_error);
    rep.passed = rep.passed && b.max_rel_error < tolerance;
    rep.blocks.push_back(std::move(b));
  }
  return rep;
}

}  // namespace

GradCheckReport grad_check_layer(AttentionLayer& layer, const Mat& x, const Mat& e,
                                 const AttentionTopology& topo, const DropKeyMask& mask,
                                 const Mat& probe_x, const Mat& probe_e, double tolerance,
                                 double step) {
  Mat xin = x, ein = e;
  auto objective = [&] {
    AttentionLayer::Cache c;
    const auto [xo, eo] = layer.forward(xin, ein, topo, mask, Mode::train, c);
    return probe_x.cwiseProduct(xo).sum() + probe_e.cwiseProduct(eo).sum();
  };

  layer.visit("", [](const std::string&, Param& p) { p.zero_grad(); });
  AttentionLayer::Cache c;
  layer.forward(xin, ein, topo, mask, Mode::train, c);
  const auto [dx, de] = layer.backward(c, topo, probe_x, probe_e);

  std::vector<Collected> parts;
  layer.visit("layer", [&](const std::string& name, Param& p) {
    parts.push_back({name, p.grad, numeric_gradient(p.value, objective, step)});
  });
  parts.push_back({"input.x", dx, numeric_gradient(xin, objective, step)});
  parts.push_back({"input.e", de, numeric_gradient(ein, objective, step)});
  return score(parts, tolerance);
}

GradCheckReport grad_check_model(GrassModel& model, const ModelInput& input,
                                 std::uint64_t dropkey_seed, const Mat& probe, double tolerance,
                                 double step, bool corrupt) {
  auto objective = [&] {
    Rng rng(dropkey_seed);
    return probe.cwiseProduct(model.forward(input, Mode::train, rng).predictions).sum();
  };
  model.zero_grad();
  GrassModel::Cache cache;
  Rng rng(dropkey_seed);
  model.forward(input, Mode::train, rng, &cache);
  model.backward(input, cache, probe);

  std::vector<Collected> parts;
  bool corrupted = false;
  model.visit([&](const std::string& name, Param& p) {
    Mat analytic = p.grad;
    if (corrupt && !corrupted && analytic.size() > 0) {
      analytic.data()[0] += 1.0 + analytic.cwiseAbs().maxCoeff();
      corrupted = true;
    }
    parts.push_back({name, std::move(analytic), numeric_gradient(p.value, objective, step)});
  });
  return score(parts, tolerance);
}

}  // namespace grass
