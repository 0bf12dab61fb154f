// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "grass/encode.hpp"
#include "grass/layer.hpp"
#include "grass/tensor.hpp"

namespace grass {

enum class Task { graph_regression, graph_classification, node_classification };
enum class InputKind { categorical, linear, none };
enum class PoolKind { sum, mean };

const char* to_string(Task t) noexcept;
const char* to_string(InputKind k) noexcept;
const char* to_string(PoolKind k) noexcept;

inline bool is_graph_task(Task t) { return t != Task::node_classification; }

struct InputSpec {
  InputKind kind = InputKind::none;
  std::size_t vocab = 0;     // categorical: ids in column 0
  std::size_t feat_dim = 0;  // linear: raw feature width
};

struct ModelConfig {
  Task task = Task::graph_regression;
  std::size_t layers = 1;
  std::size_t dim = 8;
  std::size_t head_hidden = 0;  // 0 selects a linear head
  std::size_t out_dim = 1;      // regression targets or number of classes
  Activation activation = Activation::silu;
  double attn_eps = 1e-5;
  bool log_length_scaling = false;
  InputSpec node_input;
  InputSpec edge_input;
};

struct EncodeSection {
  std::size_t k = 8;
  std::string degree_mode = "auto";  // auto | table | linear
  Index max_out_degree = 4;
  Index max_in_degree = 4;
};

struct RewireSection {
  int r = 0;
  bool retry_until_simple = false;
};

struct TrainSection {
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  double warmup_ratio = 0.1;
  double lr_init = 1e-7;
  double lr_peak = 5e-4;
  double lr_final = 1e-7;
  double beta1 = 0.95;
  double beta2 = 0.98;
  double weight_decay = 0.0;
  double label_smoothing = 0.0;
  double val_fraction = 0.0;
};

/// Complete run configuration. File form is a JSON tree with the sections
/// model, encode, rewire, train, rrwp, dropkey, edge_flip, norm and pool;
/// every key is required.
struct Config {
  std::string name = "custom";
  ModelConfig model;
  EncodeSection encode;
  RewireSection rewire;
  TrainSection train;
  bool rrwp_enabled = true;
  double dropkey_rate = 0.0;
  bool edge_flip = true;
  NormKind norm = NormKind::pnv;
  PoolKind pool = PoolKind::sum;

  void validate() const;
  DegreeMode degree_mode() const;
};

Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& path);
std::string to_json(const Config& cfg, int indent = 2);

}  // namespace grass
