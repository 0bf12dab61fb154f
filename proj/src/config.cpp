// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "grass/error.hpp"

namespace grass {

using nlohmann::json;

const char* to_string(Task t) noexcept {
  switch (t) {
    case Task::graph_regression: return "graph_regression";
    case Task::graph_classification: return "graph_classification";
    case Task::node_classification: return "node_classification";
  }
  return "?";
}

const char* to_string(InputKind k) noexcept {
  switch (k) {
    case InputKind::categorical: return "categorical";
    case InputKind::linear: return "linear";
    case InputKind::none: return "none";
  }
  return "?";
}

const char* to_string(PoolKind k) noexcept { return k == PoolKind::sum ? "sum" : "mean"; }

namespace {

Task parse_task(const std::string& s) {
  if (s == "graph_regression") return Task::graph_regression;
  if (s == "graph_classification") return Task::graph_classification;
  if (s == "node_classification") return Task::node_classification;
  fail(ErrorKind::validation, "unknown task '" + s + "'");
}

InputKind parse_input_kind(const std::string& s) {
  if (s == "categorical") return InputKind::categorical;
  if (s == "linear") return InputKind::linear;
  if (s == "none") return InputKind::none;
  fail(ErrorKind::validation, "unknown input kind '" + s + "'");
}

PoolKind parse_pool(const std::string& s) {
  if (s == "sum") return PoolKind::sum;
  if (s == "mean") return PoolKind::mean;
  fail(ErrorKind::validation, "unknown pool kind '" + s + "'");
}

const json& section(const json& root, const char* name) {
  if (!root.contains(name) || !root.at(name).is_object()) {
    fail(ErrorKind::validation, std::string("config: missing section '") + name + "'");
  }
  return root.at(name);
}

template <class T>
T field(const json& sec, const char* sec_name, const char* key) {
  if (!sec.contains(key)) {
    fail(ErrorKind::validation,
         std::string("config: missing key '") + sec_name + "." + key + "'");
  }
  try {
    return sec.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::validation,
         std::string("config: bad value for '") + sec_name + "." + key + "': " + e.what());
  }
}

InputSpec parse_input(const json& model, const char* key) {
  if (!model.contains(key) || !model.at(key).is_object()) {
    fail(ErrorKind::validation, std::string("config: missing key 'model.") + key + "'");
  }
  const json& j = model.at(key);
  InputSpec s;
  s.kind = parse_input_kind(field<std::string>(j, key, "kind"));
  if (s.kind == InputKind::categorical) s.vocab = field<std::size_t>(j, key, "vocab");
  if (s.kind == InputKind::linear) s.feat_dim = field<std::size_t>(j, key, "feat_dim");
  return s;
}

json input_json(const InputSpec& s) {
  json j{{"kind", to_string(s.kind)}};
  if (s.kind == InputKind::categorical) j["vocab"] = s.vocab;
  if (s.kind == InputKind::linear) j["feat_dim"] = s.feat_dim;
  return j;
}

}  // namespace

void Config::validate() const {
  require(model.layers >= 1, "config: model.layers must be >= 1");
  require(model.dim >= 1, "config: model.dim must be >= 1");
  require(model.out_dim >= 1, "config: model.out_dim must be >= 1");
  require(model.attn_eps >= 0.0, "config: model.attn_eps must be >= 0");
  if (model.task != Task::graph_regression) {
    require(model.out_dim >= 2, "config: classification needs out_dim (classes) >= 2");
  }
  if (model.node_input.kind == InputKind::categorical) {
    require(model.node_input.vocab >= 1, "config: node_input.vocab must be >= 1");
  }
  if (model.edge_input.kind == InputKind::categorical) {
    require(model.edge_input.vocab >= 1, "config: edge_input.vocab must be >= 1");
  }
  require(encode.k >= 1, "config: encode.k must be >= 1");
  require(encode.degree_mode == "auto" || encode.degree_mode == "table" ||
              encode.degree_mode == "linear",
          "config: encode.degree_mode must be auto, table or linear");
  require(rewire.r >= 0 && rewire.r % 2 == 0, "config: rewire.r must be even and >= 0");
  require(train.batch_size >= 1, "config: train.batch_size must be >= 1");
  require(train.warmup_ratio > 0.0 && train.warmup_ratio < 1.0,
          "config: train.warmup_ratio must lie in (0, 1)");
  require(train.lr_init > 0.0 && train.lr_peak > 0.0 && train.lr_final > 0.0,
          "config: learning rates must be positive");
  require(train.beta1 >= 0.0 && train.beta1 < 1.0 && train.beta2 >= 0.0 && train.beta2 < 1.0,
          "config: betas must lie in [0, 1)");
  require(train.weight_decay >= 0.0, "config: weight_decay must be >= 0");
  require(train.label_smoothing >= 0.0 && train.label_smoothing < 1.0,
          "config: label_smoothing must lie in [0, 1)");
  require(train.val_fraction >= 0.0 && train.val_fraction < 1.0,
          "config: val_fraction must lie in [0, 1)");
  require(dropkey_rate >= 0.0 && dropkey_rate < 1.0, "config: dropkey.rate must lie in [0, 1)");
}

DegreeMode Config::degree_mode() const {
  if (encode.degree_mode == "table") return DegreeMode::table;
  if (encode.degree_mode == "linear") return DegreeMode::linear;
  return choose_degree_mode(encode.max_out_degree, encode.max_in_degree);
}

Config parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("config: not valid JSON: ") + e.what());
  }
  Config c;
  c.name = root.value("name", std::string("custom"));

  const json& m = section(root, "model");
  c.model.task = parse_task(field<std::string>(m, "model", "task"));
  c.model.layers = field<std::size_t>(m, "model", "layers");
  c.model.dim = field<std::size_t>(m, "model", "dim");
  c.model.head_hidden = field<std::size_t>(m, "model", "head_hidden");
  c.model.out_dim = field<std::size_t>(m, "model", "out_dim");
  c.model.activation = parse_activation(field<std::string>(m, "model", "activation"));
  c.model.attn_eps = field<double>(m, "model", "attn_eps");
  c.model.log_length_scaling = field<bool>(m, "model", "log_length_scaling");
  c.model.node_input = parse_input(m, "node_input");
  c.model.edge_input = parse_input(m, "edge_input");

  const json& e = section(root, "encode");
  c.encode.k = field<std::size_t>(e, "encode", "k");
  c.encode.degree_mode = field<std::string>(e, "encode", "degree_mode");
  c.encode.max_out_degree = field<Index>(e, "encode", "max_out_degree");
  c.encode.max_in_degree = field<Index>(e, "encode", "max_in_degree");

  const json& r = section(root, "rewire");
  c.rewire.r = field<int>(r, "rewire", "r");
  c.rewire.retry_until_simple = field<bool>(r, "rewire", "retry_until_simple");

  const json& t = section(root, "train");
  c.train.epochs = field<std::size_t>(t, "train", "epochs");
  c.train.batch_size = field<std::size_t>(t, "train", "batch_size");
  c.train.warmup_ratio = field<double>(t, "train", "warmup_ratio");
  c.train.lr_init = field<double>(t, "train", "lr_init");
  c.train.lr_peak = field<double>(t, "train", "lr_peak");
  c.train.lr_final = field<double>(t, "train", "lr_final");
  c.train.beta1 = field<double>(t, "train", "beta1");
  c.train.beta2 = field<double>(t, "train", "beta2");
  c.train.weight_decay = field<double>(t, "train", "weight_decay");
  c.train.label_smoothing = field<double>(t, "train", "label_smoothing");
  c.train.val_fraction = field<double>(t, "train", "val_fraction");

  c.rrwp_enabled = field<bool>(section(root, "rrwp"), "rrwp", "enabled");
  c.dropkey_rate = field<double>(section(root, "dropkey"), "dropkey", "rate");
  c.edge_flip = field<bool>(section(root, "edge_flip"), "edge_flip", "enabled");
  c.norm = parse_norm_kind(field<std::string>(section(root, "norm"), "norm", "kind"));
  c.pool = parse_pool(field<std::string>(section(root, "pool"), "pool", "kind"));
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const Config& c, int indent) {
  json j;
  j["name"] = c.name;
  j["model"] = {{"task", to_string(c.model.task)},
                {"layers", c.model.layers},
                {"dim", c.model.dim},
                {"head_hidden", c.model.head_hidden},
                {"out_dim", c.model.out_dim},
                {"activation", to_string(c.model.activation)},
                {"attn_eps", c.model.attn_eps},
                {"log_length_scaling", c.model.log_length_scaling},
                {"node_input", input_json(c.model.node_input)},
                {"edge_input", input_json(c.model.edge_input)}};
  j["encode"] = {{"k", c.encode.k},
                 {"degree_mode", c.encode.degree_mode},
                 {"max_out_degree", c.encode.max_out_degree},
                 {"max_in_degree", c.encode.max_in_degree}};
  j["rewire"] = {{"r", c.rewire.r}, {"retry_until_simple", c.rewire.retry_until_simple}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"warmup_ratio", c.train.warmup_ratio},
                {"lr_init", c.train.lr_init},
                {"lr_peak", c.train.lr_peak},
                {"lr_final", c.train.lr_final},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"weight_decay", c.train.weight_decay},
                {"label_smoothing", c.train.label_smoothing},
                {"val_fraction", c.train.val_fraction}};
  j["rrwp"] = {{"enabled", c.rrwp_enabled}};
  j["dropkey"] = {{"rate", c.dropkey_rate}};
  j["edge_flip"] = {{"enabled", c.edge_flip}};
  j["norm"] = {{"kind", to_string(c.norm)}};
  j["pool"] = {{"kind", to_string(c.pool)}};
  return j.dump(indent);
}

}  // namespace grass
