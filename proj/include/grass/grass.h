/* Copyright 2026 The GRASS Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to the GRASS library. Every call returns a grass_status; on
 * failure grass_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * grass_string_free. */

#ifndef GRASS_GRASS_H_
#define GRASS_GRASS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GRASS_API __declspec(dllexport)
#else
#define GRASS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum grass_status {
  GRASS_OK = 0,
  GRASS_ERR_VALIDATION = 1,
  GRASS_ERR_DATA = 2,
  GRASS_ERR_IO = 3,
  GRASS_ERR_CACHE_INVALID = 4,
  GRASS_ERR_NUMERIC = 5,
  GRASS_ERR_USAGE = 6,
  GRASS_ERR_INTERNAL = 7
} grass_status;

GRASS_API const char* grass_version(void);
GRASS_API const char* grass_status_name(grass_status status);
/* Message of the last failed call on this thread; empty after success. */
GRASS_API const char* grass_last_error(void);
GRASS_API void grass_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

typedef struct grass_dataset grass_dataset;

GRASS_API grass_status grass_dataset_load(const char* path, grass_dataset** out);
GRASS_API grass_status grass_dataset_size(const grass_dataset* ds, size_t* out);
GRASS_API void grass_dataset_free(grass_dataset* ds);

/* JSON report: {"graphs", "invalid_lines", "avg_nodes", "avg_edges", "problems"}. */
GRASS_API grass_status grass_validate_dataset(const char* path, char** report_json);

/* Writes molecule-like graphs in the dataset format. */
GRASS_API grass_status grass_synth_molecules(const char* path, size_t count, uint64_t seed);

/* ---- preprocessing ----------------------------------------------------- */

GRASS_API grass_status grass_preprocess(const char* dataset_path, size_t k, const char* cache_path,
                                        unsigned jobs, int* cache_hit, size_t* graphs);

/* Walk length k configured in a config file. */
GRASS_API grass_status grass_config_walk_length(const char* config_path, size_t* k);

/* ---- models ------------------------------------------------------------ */

typedef struct grass_model grass_model;

GRASS_API grass_status grass_model_init(const char* config_path, uint64_t seed, grass_model** out);
GRASS_API grass_status grass_model_load(const char* checkpoint_path, grass_model** out);
GRASS_API grass_status grass_model_save(grass_model* model, const char* checkpoint_path);
GRASS_API grass_status grass_model_parameter_count(grass_model* model, size_t* out);
GRASS_API grass_status grass_model_config_json(const grass_model* model, char** out);
/* Eval-mode predictions for every graph (graph tasks) or node (node tasks),
 * row-major. Rewiring is drawn from `seed`. `written` receives the number
 * of doubles needed; GRASS_ERR_VALIDATION when `capacity` is too small. */
GRASS_API grass_status grass_model_predict(grass_model* model, const grass_dataset* ds,
                                           uint64_t seed, double* out, size_t capacity,
                                           size_t* written);
GRASS_API void grass_model_free(grass_model* model);

/* ---- training and evaluation ------------------------------------------- */

typedef struct grass_train_options {
  const char* config_path;
  const char* data_path;
  const char* cache_path;     /* required; produced by grass_preprocess */
  const char* val_data_path;  /* optional; NULL uses train.val_fraction */
  const char* val_cache_path; /* optional; computed in memory when NULL */
  const char* out_dir;        /* metrics.csv, best.ckpt, manifests.jsonl */
  uint64_t seed;
  int record_wallclock;
} grass_train_options;

/* JSON summary: {"checkpoint", "metric_log", "epochs", "final_train_loss",
 * "best_val_metric", "has_val"}. */
GRASS_API grass_status grass_train(const grass_train_options* opts, char** summary_json);

typedef struct grass_eval_options {
  const char* checkpoint_path;
  const char* data_path;
  const char* cache_path;  /* optional */
  int fixed_seed;          /* nonzero: every run uses `seed` */
  uint64_t seed;
  size_t runs;             /* 0 means 1 */
} grass_eval_options;

/* JSON: {"samples", "metric_name", "runs": [{"loss", "metric"}...], "mean",
 * "variance"}. */
GRASS_API grass_status grass_eval(const grass_eval_options* opts, char** result_json);

/* ---- analysis ---------------------------------------------------------- */

/* CSV rows n,r,seed,simple,edges,min_degree,max_degree,diameter,
 * diameter_bound,spectral_gap,spectral_bound for every (n, r) pair and
 * `seeds` seeds starting at `base_seed`. Spectral columns are empty when
 * n exceeds `max_spectral_nodes`. */
GRASS_API grass_status grass_rewire_stats(const size_t* ns, size_t num_ns, const int* rs,
                                          size_t num_rs, size_t seeds, uint64_t base_seed,
                                          size_t max_spectral_nodes, char** csv);

/* Finite-difference check of the model built from `config_path` on random
 * small graphs. JSON: {"passed", "max_rel_error", "blocks": [...]}. */
GRASS_API grass_status grass_gradcheck(const char* config_path, uint64_t seed, double tolerance,
                                       char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* GRASS_GRASS_H_ */
