// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/grass.h"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "grass/cache.hpp"
#include "grass/checkpoint.hpp"
#include "grass/config.hpp"
#include "grass/dataset.hpp"
#include "grass/error.hpp"
#include "grass/gradcheck.hpp"
#include "grass/model.hpp"
#include "grass/rewire.hpp"
#include "grass/synth.hpp"
#include "grass/train.hpp"

#ifndef GRASS_VERSION
#define GRASS_VERSION "0.0.0"
#endif

struct grass_dataset {
  grass::Dataset data;
};

struct grass_model {
  grass::GrassModel model;
};

namespace {

using grass::ErrorKind;
using nlohmann::json;

thread_local std::string g_last_error;

grass_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return GRASS_ERR_VALIDATION;
    case ErrorKind::data: return GRASS_ERR_DATA;
    case ErrorKind::io: return GRASS_ERR_IO;
    case ErrorKind::cache_invalid: return GRASS_ERR_CACHE_INVALID;
    case ErrorKind::numeric: return GRASS_ERR_NUMERIC;
    case ErrorKind::usage: return GRASS_ERR_USAGE;
  }
  return GRASS_ERR_INTERNAL;
}

template <class F>
grass_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return GRASS_OK;
  } catch (const grass::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return GRASS_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) grass::fail(ErrorKind::usage, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* metric_name(grass::Task t) {
  return t == grass::Task::graph_regression ? "mae" : "accuracy";
}

// Cache from disk when it matches the data, otherwise an explicit error.
grass::EncodingCache checked_cache(const std::string& cache_path, const grass::Dataset& ds,
                                   std::size_t k, const std::string& data_path) {
  if (!std::filesystem::exists(cache_path)) {
    grass::fail(ErrorKind::data, "cache '" + cache_path + "' not found; run `grass preprocess --data " +
                                     data_path + " --k " + std::to_string(k) + " --cache " +
                                     cache_path + "` first");
  }
  grass::EncodingCache c = grass::read_cache(cache_path);
  if (c.dataset_hash != ds.content_hash || c.k != k || c.graphs.size() != ds.size()) {
    grass::fail(ErrorKind::cache_invalid,
                "cache '" + cache_path + "' was built for a different dataset or k (cache k=" +
                    std::to_string(c.k) + ", config k=" + std::to_string(k) +
                    "); rerun preprocess");
  }
  return c;
}

grass::Mat random_features(const grass::InputSpec& spec, std::size_t rows, grass::Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  switch (spec.kind) {
    case grass::InputKind::categorical: {
      std::uniform_int_distribution<std::size_t> id(0, spec.vocab - 1);
      grass::Mat m(static_cast<Eigen::Index>(rows), 1);
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, 0) = static_cast<double>(id(rng));
      return m;
    }
    case grass::InputKind::linear: {
      grass::Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(spec.feat_dim));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
      return m;
    }
    case grass::InputKind::none:
      break;
  }
  return grass::Mat(static_cast<Eigen::Index>(rows), 0);
}

grass::GraphPtr random_small_graph(const grass::Config& cfg, std::size_t n, grass::Rng& rng) {
  std::vector<grass::Edge> edges;
  std::bernoulli_distribution coin(0.5);
  for (grass::Index i = 0; i < n; ++i) {
    for (grass::Index j = i + 1; j < n; ++j) {
      if (coin(rng) || j == i + 1) edges.push_back({i, j});
    }
  }
  return std::make_shared<const grass::Graph>(grass::build_graph(
      n, edges, random_features(cfg.model.node_input, n, rng),
      random_features(cfg.model.edge_input, edges.size(), rng), false));
}

json block_rows(const grass::GradCheckReport& rep, const char* scope) {
  json blocks = json::array();
  for (const auto& b : rep.blocks) {
    blocks.push_back({{"scope", scope}, {"name", b.name}, {"max_abs_error", b.max_abs_error},
                      {"max_rel_error", b.max_rel_error}, {"raw_rel_error", b.raw_rel_error}});
  }
  return blocks;
}

}  // namespace

extern "C" {

const char* grass_version(void) { return GRASS_VERSION; }

const char* grass_status_name(grass_status s) {
  switch (s) {
    case GRASS_OK: return "ok";
    case GRASS_ERR_VALIDATION: return "validation";
    case GRASS_ERR_DATA: return "data";
    case GRASS_ERR_IO: return "io";
    case GRASS_ERR_CACHE_INVALID: return "cache_invalid";
    case GRASS_ERR_NUMERIC: return "numeric";
    case GRASS_ERR_USAGE: return "usage";
    case GRASS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* grass_last_error(void) { return g_last_error.c_str(); }

void grass_string_free(char* s) { std::free(s); }

grass_status grass_dataset_load(const char* path, grass_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto ds = std::make_unique<grass_dataset>();
    ds->data = grass::read_jsonl(path);
    *out = ds.release();
  });
}

grass_status grass_dataset_size(const grass_dataset* ds, size_t* out) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    *out = ds->data.size();
  });
}

void grass_dataset_free(grass_dataset* ds) { delete ds; }

grass_status grass_validate_dataset(const char* path, char** report_json) {
  return guard([&] {
    need(path, "path");
    need(report_json, "report_json");
    const grass::DatasetReport rep = grass::validate_dataset(path);
    json j{{"graphs", rep.graphs},
           {"invalid_lines", rep.invalid_lines},
           {"avg_nodes", rep.avg_nodes},
           {"avg_edges", rep.avg_edges},
           {"problems", rep.problems}};
    *report_json = dup_string(j.dump());
  });
}

grass_status grass_synth_molecules(const char* path, size_t count, uint64_t seed) {
  return guard([&] {
    need(path, "path");
    grass::write_jsonl(path, grass::synthetic_molecules(count, seed));
  });
}

grass_status grass_preprocess(const char* dataset_path, size_t k, const char* cache_path,
                              unsigned jobs, int* cache_hit, size_t* graphs) {
  return guard([&] {
    need(dataset_path, "dataset_path");
    need(cache_path, "cache_path");
    if (!std::filesystem::exists(dataset_path)) {
      grass::fail(ErrorKind::data, std::string("dataset '") + dataset_path + "' not found");
    }
    const grass::PrecomputeResult r = grass::precompute_cache(dataset_path, k, cache_path, jobs);
    if (cache_hit) *cache_hit = r.cache_hit ? 1 : 0;
    if (graphs) *graphs = r.graphs;
  });
}

grass_status grass_config_walk_length(const char* config_path, size_t* k) {
  return guard([&] {
    need(config_path, "config_path");
    need(k, "k");
    *k = grass::load_config(config_path).encode.k;
  });
}

grass_status grass_model_init(const char* config_path, uint64_t seed, grass_model** out) {
  return guard([&] {
    need(config_path, "config_path");
    need(out, "out");
    auto m = std::make_unique<grass_model>();
    m->model = grass::init_params(grass::load_config(config_path), seed);
    *out = m.release();
  });
}

grass_status grass_model_load(const char* checkpoint_path, grass_model** out) {
  return guard([&] {
    need(checkpoint_path, "checkpoint_path");
    need(out, "out");
    auto m = std::make_unique<grass_model>();
    m->model = grass::load_checkpoint(checkpoint_path);
    *out = m.release();
  });
}

grass_status grass_model_save(grass_model* model, const char* checkpoint_path) {
  return guard([&] {
    need(model, "model");
    need(checkpoint_path, "checkpoint_path");
    grass::save_checkpoint(checkpoint_path, model->model);
  });
}

grass_status grass_model_parameter_count(grass_model* model, size_t* out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = model->model.parameter_count();
  });
}

grass_status grass_model_config_json(const grass_model* model, char** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = dup_string(grass::to_json(model->model.config()));
  });
}

grass_status grass_model_predict(grass_model* model, const grass_dataset* ds, uint64_t seed,
                                 double* out, size_t capacity, size_t* written) {
  return guard([&] {
    need(model, "model");
    need(ds, "dataset");
    need(written, "written");
    grass::GrassModel& m = model->model;
    const grass::Config& cfg = m.config();
    grass::RewireConfig rc;
    rc.r = cfg.rewire.r;
    rc.retry_until_simple = cfg.rewire.retry_until_simple;
    std::vector<double> values;
    for (std::size_t i = 0; i < ds->data.size(); ++i) {
      const grass::Sample& s = ds->data.samples[i];
      const grass::GraphEncoding enc = grass::encode_graph(*s.graph, cfg.encode.k);
      grass::Rng rewire_rng = grass::make_rng(seed, {static_cast<std::uint64_t>(grass::Stream::eval_rewire), i});
      grass::Rng dropkey_rng = grass::make_rng(seed, {static_cast<std::uint64_t>(grass::Stream::eval_dropkey), i});
      const grass::ModelOutput o =
          grass::forward(m, s.graph, enc, rc, grass::Mode::eval, rewire_rng, dropkey_rng);
      values.insert(values.end(), o.predictions.data(), o.predictions.data() + o.predictions.size());
    }
    *written = values.size();
    if (values.size() > capacity) {
      grass::fail(ErrorKind::validation, "output buffer holds " + std::to_string(capacity) +
                                             " values, " + std::to_string(values.size()) + " needed");
    }
    need(out, "out");
    std::copy(values.begin(), values.end(), out);
  });
}

void grass_model_free(grass_model* model) { delete model; }

grass_status grass_train(const grass_train_options* opts, char** summary_json) {
  return guard([&] {
    need(opts, "opts");
    need(opts->config_path, "config_path");
    need(opts->data_path, "data_path");
    need(opts->cache_path, "cache_path");
    need(opts->out_dir, "out_dir");
    const std::string start = utc_now();
    const grass::Config cfg = grass::load_config(opts->config_path);
    if (!std::filesystem::exists(opts->data_path)) {
      grass::fail(ErrorKind::data, std::string("dataset '") + opts->data_path + "' not found");
    }
    const grass::Dataset ds = grass::read_jsonl(opts->data_path);
    const grass::EncodingCache enc = checked_cache(opts->cache_path, ds, cfg.encode.k, opts->data_path);

    grass::LabeledData train = grass::all_of(ds, enc);
    std::optional<grass::LabeledData> val;
    grass::Dataset val_ds;
    grass::EncodingCache val_enc;
    if (opts->val_data_path) {
      val_ds = grass::read_jsonl(opts->val_data_path);
      val_enc = opts->val_cache_path
                    ? checked_cache(opts->val_cache_path, val_ds, cfg.encode.k, opts->val_data_path)
                    : grass::compute_encodings(val_ds, cfg.encode.k);
      val = grass::all_of(val_ds, val_enc);
    } else if (cfg.train.val_fraction > 0.0) {
      const auto n_val = static_cast<std::size_t>(cfg.train.val_fraction * static_cast<double>(ds.size()));
      val = grass::LabeledData{&ds, &enc, {}};
      val->indices.assign(train.indices.end() - static_cast<std::ptrdiff_t>(n_val), train.indices.end());
      train.indices.resize(train.indices.size() - n_val);
    }

    grass::TrainOptions to;
    to.out_dir = opts->out_dir;
    to.seed = opts->seed;
    to.record_wallclock = opts->record_wallclock != 0;
    const grass::TrainResult r = grass::train_loop(cfg, train, val, to);

    json manifest{{"config", json::parse(grass::to_json(cfg))},
                  {"dataset", opts->data_path},
                  {"dataset_hash", hex64(ds.content_hash)},
                  {"cache", opts->cache_path},
                  {"cache_hash", hex64(grass::file_hash(opts->cache_path))},
                  {"seeds",
                   {{"base", opts->seed},
                    {"init", grass::derive_seed(opts->seed, {static_cast<std::uint64_t>(grass::Stream::init)})}}},
                  {"deterministic", grass::deterministic_mode()},
                  {"code_version", GRASS_VERSION},
                  {"start", start},
                  {"end", utc_now()},
                  {"outputs", {r.checkpoint.string(), r.metric_log.string()}}};
    if (opts->val_data_path) manifest["val_dataset"] = opts->val_data_path;
    {
      std::ofstream mf(std::filesystem::path(opts->out_dir) / "manifests.jsonl", std::ios::app);
      if (!mf) grass::fail(ErrorKind::io, "cannot append run manifest");
      mf << manifest.dump() << '\n';
    }
    if (summary_json) {
      json s{{"checkpoint", r.checkpoint.string()},
             {"metric_log", r.metric_log.string()},
             {"epochs", r.epochs},
             {"final_train_loss", r.final_train_loss},
             {"best_val_metric", r.best_val_metric},
             {"metric_name", metric_name(cfg.model.task)},
             {"has_val", r.has_val}};
      *summary_json = dup_string(s.dump());
    }
  });
}

grass_status grass_eval(const grass_eval_options* opts, char** result_json) {
  return guard([&] {
    need(opts, "opts");
    need(opts->checkpoint_path, "checkpoint_path");
    need(opts->data_path, "data_path");
    need(result_json, "result_json");
    grass::GrassModel model = grass::load_checkpoint(opts->checkpoint_path);
    const grass::Config& cfg = model.config();
    if (!std::filesystem::exists(opts->data_path)) {
      grass::fail(ErrorKind::data, std::string("dataset '") + opts->data_path + "' not found");
    }
    const grass::Dataset ds = grass::read_jsonl(opts->data_path);
    const grass::EncodingCache enc = opts->cache_path
                                         ? checked_cache(opts->cache_path, ds, cfg.encode.k, opts->data_path)
                                         : grass::compute_encodings(ds, cfg.encode.k);
    const grass::LabeledData data = grass::all_of(ds, enc);
    const std::size_t runs = opts->runs == 0 ? 1 : opts->runs;
    std::random_device rd;
    json rows = json::array();
    std::vector<double> metrics;
    for (std::size_t i = 0; i < runs; ++i) {
      const std::uint64_t seed = opts->fixed_seed ? opts->seed : (std::uint64_t{rd()} << 32) ^ rd();
      const grass::EvalResult r = grass::evaluate(model, data, seed);
      rows.push_back({{"loss", r.loss}, {"metric", r.metric}});
      metrics.push_back(r.metric);
    }
    // two passes; the one-pass form cancels badly for tiny variances
    const double mean = std::accumulate(metrics.begin(), metrics.end(), 0.0) / static_cast<double>(runs);
    double var = 0.0;
    for (double m : metrics) var += (m - mean) * (m - mean);
    var = runs > 1 ? var / static_cast<double>(runs - 1) : 0.0;
    json j{{"samples", ds.size()}, {"metric_name", metric_name(cfg.model.task)},
           {"runs", rows},         {"mean", mean},
           {"variance", var}};
    *result_json = dup_string(j.dump());
  });
}

grass_status grass_rewire_stats(const size_t* ns, size_t num_ns, const int* rs, size_t num_rs,
                                size_t seeds, uint64_t base_seed, size_t max_spectral_nodes,
                                char** csv) {
  return guard([&] {
    need(csv, "csv");
    if (num_ns) need(ns, "ns");
    if (num_rs) need(rs, "rs");
    std::ostringstream out;
    out.precision(12);
    out << "n,r,seed,simple,edges,min_degree,max_degree,diameter,diameter_bound,spectral_gap,spectral_bound\n";
    for (std::size_t a = 0; a < num_ns; ++a) {
      for (std::size_t b = 0; b < num_rs; ++b) {
        const std::size_t n = ns[a];
        const int r = rs[b];
        for (std::size_t s = 0; s < seeds; ++s) {
          const std::uint64_t seed = base_seed + s;
          grass::Rng rng = grass::make_rng(seed, {static_cast<std::uint64_t>(grass::Stream::rewire), n,
                                                  static_cast<std::uint64_t>(r)});
          const grass::Pseudograph pg = grass::sample_permutation_pseudograph(n, r, rng);
          const std::vector<grass::NodePair> edges = grass::simplify(pg);
          std::vector<std::size_t> deg(n, 0);
          for (const auto& e : edges) {
            ++deg[e.a];
            ++deg[e.b];
          }
          const auto [mn, mx] = std::minmax_element(deg.begin(), deg.end());
          const auto d = grass::diameter(edges, n);
          out << n << ',' << r << ',' << seed << ',' << (grass::is_simple(pg) ? 1 : 0) << ','
              << edges.size() << ',' << *mn << ',' << *mx << ',';
          if (d) out << *d;
          else out << "inf";
          out << ',' << (n >= 2 && r >= 3 ? std::to_string(grass::diameter_upper_bound(n, r)) : "") << ',';
          if (n >= 2 && n <= max_spectral_nodes) out << grass::spectral_gap(edges, n);
          out << ',' << grass::spectral_gap_lower_bound(r) << '\n';
        }
      }
    }
    *csv = dup_string(out.str());
  });
}

grass_status grass_gradcheck(const char* config_path, uint64_t seed, double tolerance,
                             char** report_json) {
  return guard([&] {
    need(config_path, "config_path");
    need(report_json, "report_json");
    const grass::Config cfg = grass::load_config(config_path);
    grass::Rng rng = grass::make_rng(seed, {0x67636bULL});
    std::normal_distribution<double> nd(0.0, 1.0);
    auto randn = [&](Eigen::Index r, Eigen::Index c) {
      grass::Mat m(r, c);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
      return m;
    };

    // one layer with the configured width, norm and residual scale, both orientations
    grass::LayerConfig lc;
    lc.dim = cfg.model.dim;
    lc.activation = cfg.model.activation;
    lc.attn_eps = cfg.model.attn_eps;
    lc.log_length_scaling = cfg.model.log_length_scaling;
    lc.norm = cfg.norm;
    lc.alpha = grass::deepnorm_alpha(cfg.model.layers);
    grass::AttentionLayer layer(lc);
    layer.init(rng, grass::deepnorm_beta(cfg.model.layers));
    const auto n = static_cast<Eigen::Index>(cfg.model.dim);
    grass::GradCheckReport layer_rep;
    json blocks = json::array();
    for (int g = 0; g < 4; ++g) {
      grass::RewireConfig rc;
      rc.r = cfg.rewire.r;
      const grass::RewiredGraph h = grass::rewire(random_small_graph(cfg, 5, rng), rc, rng);
      std::vector<grass::Index> heads, tails;
      for (std::size_t e = 0; e < h.num_edges(); ++e) {
        heads.push_back(h.edge(e).head);
        tails.push_back(h.edge(e).tail);
      }
      const auto topo = grass::make_topology(5, heads, tails, g % 2 == 1 && cfg.edge_flip);
      const auto m = static_cast<Eigen::Index>(h.num_edges());
      const grass::DropKeyMask mask =
          grass::sample_dropkey(h.num_edges(), cfg.model.dim, cfg.dropkey_rate, grass::Mode::train, rng);
      const auto rep = grass::grad_check_layer(layer, randn(5, n), randn(m, n), topo, mask, randn(5, n),
                                               randn(m, n), tolerance);
      layer_rep.max_rel_error = std::max(layer_rep.max_rel_error, rep.max_rel_error);
      layer_rep.passed = layer_rep.passed && rep.passed;
      for (auto& b : block_rows(rep, "layer")) blocks.push_back(b);
    }

    // whole model only when finite differences stay affordable
    bool model_checked = false;
    grass::GradCheckReport model_rep;
    grass::GrassModel model = grass::init_params(cfg, seed);
    if (model.parameter_count() <= 20000) {
      model_checked = true;
      grass::RewireConfig rc;
      rc.r = cfg.rewire.r;
      const grass::GraphPtr g = random_small_graph(cfg, 5, rng);
      const grass::GraphEncoding enc = grass::encode_graph(*g, cfg.encode.k);
      const grass::RewiredGraph h = grass::rewire(g, rc, rng);
      const grass::ModelInput in = grass::assemble_input(h, enc);
      const Eigen::Index rows = grass::is_graph_task(cfg.model.task) ? 1 : 5;
      model_rep = grass::grad_check_model(model, in, seed ^ 0x9e37ULL, randn(rows, static_cast<Eigen::Index>(cfg.model.out_dim)),
                                          tolerance);
      for (auto& b : block_rows(model_rep, "model")) blocks.push_back(b);
    }
    json j{{"passed", layer_rep.passed && model_rep.passed},
           {"max_rel_error", std::max(layer_rep.max_rel_error, model_rep.max_rel_error)},
           {"tolerance", tolerance},
           {"model_checked", model_checked},
           {"blocks", blocks}};
    *report_json = dup_string(j.dump());
  });
}

}  // extern "C"
