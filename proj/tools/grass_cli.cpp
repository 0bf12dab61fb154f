// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library only through grass.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grass/grass.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code(grass_status s) {
  switch (s) {
    case GRASS_OK: return 0;
    case GRASS_ERR_USAGE: return kExitUsage;
    case GRASS_ERR_VALIDATION:
    case GRASS_ERR_DATA:
    case GRASS_ERR_IO:
    case GRASS_ERR_CACHE_INVALID: return kExitData;
    case GRASS_ERR_NUMERIC: return kExitNumeric;
    case GRASS_ERR_INTERNAL: break;
  }
  return 1;
}

int report(grass_status s) {
  if (s != GRASS_OK) {
    std::cerr << "grass: " << grass_status_name(s) << " error: " << grass_last_error() << "\n";
  }
  return exit_code(s);
}

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  grass_string_free(s);
  return out;
}

bool deterministic() {
  const char* v = std::getenv("GRASS_DETERMINISTIC");
  return v && std::string(v) == "1";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRASS: graph attention with random-regular rewiring"};
  app.set_version_flag("--version", std::string(grass_version()));
  app.require_subcommand(1);

  // validate-data
  std::string vd_path;
  auto* vd = app.add_subcommand("validate-data", "Check a dataset file line by line");
  vd->add_option("--data", vd_path, "Dataset (JSONL)")->required();

  // synth
  std::string sy_out;
  std::size_t sy_count = 1000;
  std::uint64_t sy_seed = 0;
  auto* sy = app.add_subcommand("synth", "Write molecule-like graphs in the dataset format");
  sy->add_option("--out", sy_out, "Output dataset path")->required();
  sy->add_option("--count", sy_count, "Number of graphs");
  sy->add_option("--seed", sy_seed, "Generator seed");

  // preprocess
  std::string pp_data, pp_cache, pp_config;
  std::size_t pp_k = 0;
  unsigned pp_jobs = 1;
  auto* pp = app.add_subcommand("preprocess", "Precompute walk probabilities and degree tables");
  pp->add_option("--data", pp_data, "Dataset (JSONL)")->required();
  pp->add_option("--cache", pp_cache, "Cache file to write")->required();
  auto* k_opt = pp->add_option("--k", pp_k, "Walk length");
  auto* cfg_opt = pp->add_option("--config", pp_config, "Read the walk length from a config");
  k_opt->excludes(cfg_opt);
  pp->add_option("--jobs", pp_jobs, "Worker threads")->check(CLI::PositiveNumber);

  // train
  grass_train_options to{};
  std::string tr_config, tr_data, tr_cache, tr_val, tr_val_cache, tr_out = "runs/latest";
  std::uint64_t tr_seed = 0;
  bool tr_no_wallclock = false;
  auto* tr = app.add_subcommand("train", "Train a model and keep the best checkpoint");
  tr->add_option("--config", tr_config, "Config file")->required();
  tr->add_option("--data", tr_data, "Training dataset")->required();
  tr->add_option("--cache", tr_cache, "Cache from `preprocess`")->required();
  tr->add_option("--seed", tr_seed, "Base seed");
  tr->add_option("--out", tr_out, "Output directory");
  tr->add_option("--val-data", tr_val, "Validation dataset");
  tr->add_option("--val-cache", tr_val_cache, "Validation cache");
  tr->add_flag("--no-wallclock", tr_no_wallclock, "Write 0 in the wallclock column");

  // eval
  std::string ev_ckpt, ev_data, ev_cache;
  std::uint64_t ev_seed = 0;
  std::size_t ev_runs = 1;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
  ev->add_option("--data", ev_data, "Dataset")->required();
  ev->add_option("--cache", ev_cache, "Cache for the dataset");
  auto* fixed_opt = ev->add_option("--fixed-eval-seed", ev_seed, "Reproducible rewiring seed");
  ev->add_option("--runs", ev_runs, "Repeat with fresh rewiring and report the variance")
      ->check(CLI::PositiveNumber);

  // rewire-stats
  std::vector<std::size_t> rs_n{200};
  std::vector<int> rs_r{6};
  std::size_t rs_seeds = 10, rs_max_spec = 2000;
  std::uint64_t rs_base = 0;
  std::string rs_out;
  auto* rs = app.add_subcommand("rewire-stats", "Regularity, diameter and spectral gap of sampled graphs");
  rs->add_option("--n", rs_n, "Node counts")->delimiter(',');
  rs->add_option("--r", rs_r, "Degrees (even)")->delimiter(',');
  rs->add_option("--seeds", rs_seeds, "Seeds per (n, r)");
  rs->add_option("--base-seed", rs_base, "First seed");
  rs->add_option("--max-spectral-nodes", rs_max_spec, "Skip the eigensolve above this size");
  rs->add_option("--out", rs_out, "CSV output (stdout when omitted)");

  // gradcheck
  std::string gc_config;
  std::uint64_t gc_seed = 0;
  double gc_tol = 1e-4;
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gc->add_option("--config", gc_config, "Config file")->required();
  gc->add_option("--seed", gc_seed, "Seed");
  gc->add_option("--tol", gc_tol, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*vd) {
    char* out = nullptr;
    const grass_status s = grass_validate_dataset(vd_path.c_str(), &out);
    if (s != GRASS_OK) return report(s);
    const auto j = nlohmann::json::parse(take(out));
    std::printf("graphs: %zu\ninvalid lines: %zu\navg nodes: %.2f\navg edges: %.2f\n",
                j["graphs"].get<std::size_t>(), j["invalid_lines"].get<std::size_t>(),
                j["avg_nodes"].get<double>(), j["avg_edges"].get<double>());
    for (const auto& p : j["problems"]) std::printf("  %s\n", p.get<std::string>().c_str());
    return j["invalid_lines"].get<std::size_t>() == 0 ? 0 : kExitData;
  }
  if (*sy) {
    const grass_status s = grass_synth_molecules(sy_out.c_str(), sy_count, sy_seed);
    if (s == GRASS_OK) std::printf("wrote %zu graphs to %s\n", sy_count, sy_out.c_str());
    return report(s);
  }
  if (*pp) {
    if (!pp_config.empty()) {
      const grass_status s = grass_config_walk_length(pp_config.c_str(), &pp_k);
      if (s != GRASS_OK) return report(s);
    }
    if (pp_k == 0) {
      std::cerr << "grass: preprocess needs --k or --config\n";
      return kExitUsage;
    }
    int hit = 0;
    std::size_t graphs = 0;
    const unsigned jobs = deterministic() ? 1u : pp_jobs;
    const grass_status s = grass_preprocess(pp_data.c_str(), pp_k, pp_cache.c_str(), jobs, &hit, &graphs);
    if (s == GRASS_OK) {
      std::printf("%s: %zu graphs, k=%zu (%s)\n", pp_cache.c_str(), graphs, pp_k,
                  hit ? "cache hit" : "computed");
    }
    return report(s);
  }
  if (*tr) {
    to.config_path = tr_config.c_str();
    to.data_path = tr_data.c_str();
    to.cache_path = tr_cache.c_str();
    to.val_data_path = tr_val.empty() ? nullptr : tr_val.c_str();
    to.val_cache_path = tr_val_cache.empty() ? nullptr : tr_val_cache.c_str();
    to.out_dir = tr_out.c_str();
    to.seed = tr_seed;
    to.record_wallclock = tr_no_wallclock ? 0 : 1;
    char* out = nullptr;
    const grass_status s = grass_train(&to, &out);
    if (s != GRASS_OK) return report(s);
    const auto j = nlohmann::json::parse(take(out));
    std::printf("epochs: %zu\nfinal train loss: %.6g\n", j["epochs"].get<std::size_t>(),
                j["final_train_loss"].get<double>());
    if (j["has_val"].get<bool>()) {
      std::printf("best val %s: %.6g\n", j["metric_name"].get<std::string>().c_str(),
                  j["best_val_metric"].get<double>());
    }
    std::printf("checkpoint: %s\nmetrics: %s\n", j["checkpoint"].get<std::string>().c_str(),
                j["metric_log"].get<std::string>().c_str());
    return 0;
  }
  if (*ev) {
    grass_eval_options eo{};
    eo.checkpoint_path = ev_ckpt.c_str();
    eo.data_path = ev_data.c_str();
    eo.cache_path = ev_cache.empty() ? nullptr : ev_cache.c_str();
    eo.fixed_seed = fixed_opt->count() > 0 ? 1 : 0;
    eo.seed = ev_seed;
    eo.runs = ev_runs;
    char* out = nullptr;
    const grass_status s = grass_eval(&eo, &out);
    if (s != GRASS_OK) return report(s);
    const auto j = nlohmann::json::parse(take(out));
    const std::string name = j["metric_name"].get<std::string>();
    std::printf("samples: %zu\n", j["samples"].get<std::size_t>());
    for (const auto& r : j["runs"]) {
      std::printf("loss %.6g  %s %.6g\n", r["loss"].get<double>(), name.c_str(), r["metric"].get<double>());
    }
    if (j["runs"].size() > 1) {
      std::printf("mean %s: %.6g\nvariance: %.6g\n", name.c_str(), j["mean"].get<double>(),
                  j["variance"].get<double>());
    }
    return 0;
  }
  if (*rs) {
    char* out = nullptr;
    const grass_status s = grass_rewire_stats(rs_n.data(), rs_n.size(), rs_r.data(), rs_r.size(), rs_seeds,
                                              rs_base, rs_max_spec, &out);
    if (s != GRASS_OK) return report(s);
    const std::string csv = take(out);
    if (rs_out.empty()) {
      std::fputs(csv.c_str(), stdout);
    } else {
      std::ofstream f(rs_out, std::ios::trunc);
      f << csv;
      if (!f) {
        std::cerr << "grass: cannot write '" << rs_out << "'\n";
        return kExitData;
      }
    }
    return 0;
  }
  if (*gc) {
    char* out = nullptr;
    const grass_status s = grass_gradcheck(gc_config.c_str(), gc_seed, gc_tol, &out);
    if (s != GRASS_OK) return report(s);
    const auto j = nlohmann::json::parse(take(out));
    for (const auto& b : j["blocks"]) {
      std::printf("%-6s %-40s rel %.3e\n", b["scope"].get<std::string>().c_str(),
                  b["name"].get<std::string>().c_str(), b["max_rel_error"].get<double>());
    }
    std::printf("max relative error %.3e (tolerance %.1e): %s\n", j["max_rel_error"].get<double>(), gc_tol,
                j["passed"].get<bool>() ? "PASS" : "FAIL");
    return j["passed"].get<bool>() ? 0 : kExitNumeric;
  }
  return kExitUsage;
}
