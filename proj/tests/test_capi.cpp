// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "grass/grass.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  grass_string_free(s);
  return out;
}

class CApi : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("grass_capi_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
    std::ifstream in(std::string(GRASS_CONFIG_DIR) + "/zinc_desk.json");
    json cfg = json::parse(in);
    cfg["model"]["layers"] = 2;
    cfg["model"]["dim"] = 4;
    cfg["model"]["head_hidden"] = 4;
    cfg["encode"]["k"] = 3;
    cfg["train"]["epochs"] = 2;
    cfg["train"]["batch_size"] = 4;
    cfg["train"]["val_fraction"] = 0.25;
    std::ofstream(dir_ / "tiny.json") << cfg.dump(2);
    ASSERT_EQ(grass_synth_molecules(path("d.jsonl"), 8, 3), GRASS_OK);
  }
  void TearDown() override { fs::remove_all(dir_); }
  const char* path(const std::string& name) {
    paths_.push_back((dir_ / name).string());
    return paths_.back().c_str();
  }
  fs::path dir_;
  std::deque<std::string> paths_;  // stable c_str() pointers
};

TEST(CApiBasics, VersionAndStatusNames) {
  EXPECT_STRNE(grass_version(), "");
  EXPECT_STREQ(grass_status_name(GRASS_OK), "ok");
  EXPECT_STREQ(grass_status_name(GRASS_ERR_CACHE_INVALID), "cache_invalid");
  grass_string_free(nullptr);
}

TEST(CApiBasics, NullArgumentsAreUsageErrors) {
  EXPECT_EQ(grass_dataset_load(nullptr, nullptr), GRASS_ERR_USAGE);
  EXPECT_NE(std::string(grass_last_error()), "");
  EXPECT_EQ(grass_train(nullptr, nullptr), GRASS_ERR_USAGE);
  grass_model_free(nullptr);
  grass_dataset_free(nullptr);
}

TEST_F(CApi, MissingFileReportsPath) {
  grass_dataset* ds = nullptr;
  const grass_status st = grass_dataset_load(path("nope.jsonl"), &ds);
  EXPECT_TRUE(st == GRASS_ERR_IO || st == GRASS_ERR_DATA) << st;
  EXPECT_NE(std::string(grass_last_error()).find("nope.jsonl"), std::string::npos);
  EXPECT_EQ(ds, nullptr);
}

TEST_F(CApi, ValidateAndLoad) {
  char* report = nullptr;
  ASSERT_EQ(grass_validate_dataset(path("d.jsonl"), &report), GRASS_OK);
  const json r = json::parse(take(report));
  EXPECT_EQ(r["graphs"], 8);
  EXPECT_EQ(r["invalid_lines"], 0);
  grass_dataset* ds = nullptr;
  ASSERT_EQ(grass_dataset_load(path("d.jsonl"), &ds), GRASS_OK);
  size_t n = 0;
  EXPECT_EQ(grass_dataset_size(ds, &n), GRASS_OK);
  EXPECT_EQ(n, 8u);
  grass_dataset_free(ds);
}

TEST_F(CApi, PreprocessTrainEvalPredict) {
  size_t k = 0;
  ASSERT_EQ(grass_config_walk_length(path("tiny.json"), &k), GRASS_OK);
  EXPECT_EQ(k, 3u);
  int hit = -1;
  size_t graphs = 0;
  ASSERT_EQ(grass_preprocess(path("d.jsonl"), k, path("d.cache"), 1, &hit, &graphs), GRASS_OK);
  EXPECT_EQ(hit, 0);
  EXPECT_EQ(graphs, 8u);
  ASSERT_EQ(grass_preprocess(path("d.jsonl"), k, path("d.cache"), 1, &hit, &graphs), GRASS_OK);
  EXPECT_EQ(hit, 1);

  grass_train_options to{};
  to.config_path = path("tiny.json");
  to.data_path = path("d.jsonl");
  to.cache_path = path("d.cache");
  to.out_dir = path("run");
  to.seed = 5;
  char* summary = nullptr;
  ASSERT_EQ(grass_train(&to, &summary), GRASS_OK) << grass_last_error();
  const json s = json::parse(take(summary));
  EXPECT_EQ(s["epochs"], 2);
  EXPECT_TRUE(s["has_val"].get<bool>());
  EXPECT_TRUE(fs::exists(dir_ / "run" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "manifests.jsonl"));
  const json manifest = json::parse(std::ifstream(dir_ / "run" / "manifests.jsonl"));
  EXPECT_TRUE(manifest.contains("code_version"));
  EXPECT_TRUE(manifest.contains("dataset_hash"));

  grass_eval_options eo{};
  eo.checkpoint_path = path("run/best.ckpt");
  eo.data_path = path("d.jsonl");
  eo.cache_path = path("d.cache");
  eo.fixed_seed = 1;
  eo.seed = 9;
  eo.runs = 3;
  char* result = nullptr;
  ASSERT_EQ(grass_eval(&eo, &result), GRASS_OK) << grass_last_error();
  const json e = json::parse(take(result));
  ASSERT_EQ(e["runs"].size(), 3u);
  EXPECT_EQ(e["runs"][0]["metric"], e["runs"][2]["metric"]);
  EXPECT_DOUBLE_EQ(e["variance"].get<double>(), 0.0);

  grass_model* m = nullptr;
  ASSERT_EQ(grass_model_load(path("run/best.ckpt"), &m), GRASS_OK);
  grass_dataset* ds = nullptr;
  ASSERT_EQ(grass_dataset_load(path("d.jsonl"), &ds), GRASS_OK);
  size_t written = 0;
  EXPECT_EQ(grass_model_predict(m, ds, 1, nullptr, 0, &written), GRASS_ERR_VALIDATION);
  ASSERT_EQ(written, 8u);
  std::vector<double> a(8), b(8);
  ASSERT_EQ(grass_model_predict(m, ds, 1, a.data(), a.size(), &written), GRASS_OK);
  ASSERT_EQ(grass_model_predict(m, ds, 1, b.data(), b.size(), &written), GRASS_OK);
  EXPECT_EQ(a, b);
  grass_dataset_free(ds);
  grass_model_free(m);
}

TEST_F(CApi, TrainWithoutCacheExplainsRemedy) {
  grass_train_options to{};
  to.config_path = path("tiny.json");
  to.data_path = path("d.jsonl");
  to.cache_path = path("absent.cache");
  to.out_dir = path("run");
  char* summary = nullptr;
  EXPECT_NE(grass_train(&to, &summary), GRASS_OK);
  EXPECT_NE(std::string(grass_last_error()).find("preprocess"), std::string::npos);
}

TEST_F(CApi, MismatchedCacheIsCacheInvalid) {
  int hit = 0;
  size_t graphs = 0;
  ASSERT_EQ(grass_preprocess(path("d.jsonl"), 5, path("d.cache"), 1, &hit, &graphs), GRASS_OK);
  grass_train_options to{};
  to.config_path = path("tiny.json");  // k = 3
  to.data_path = path("d.jsonl");
  to.cache_path = path("d.cache");
  to.out_dir = path("run");
  char* summary = nullptr;
  EXPECT_EQ(grass_train(&to, &summary), GRASS_ERR_CACHE_INVALID);
}

TEST_F(CApi, ModelSaveLoadAndCount) {
  grass_model* m = nullptr;
  ASSERT_EQ(grass_model_init(path("tiny.json"), 1, &m), GRASS_OK);
  size_t count = 0;
  ASSERT_EQ(grass_model_parameter_count(m, &count), GRASS_OK);
  EXPECT_GT(count, 0u);
  ASSERT_EQ(grass_model_save(m, path("m.ckpt")), GRASS_OK);
  grass_model* back = nullptr;
  ASSERT_EQ(grass_model_load(path("m.ckpt"), &back), GRASS_OK);
  size_t count2 = 0;
  grass_model_parameter_count(back, &count2);
  EXPECT_EQ(count, count2);
  char* a = nullptr;
  char* b = nullptr;
  grass_model_config_json(m, &a);
  grass_model_config_json(back, &b);
  EXPECT_EQ(take(a), take(b));
  grass_model_free(m);
  grass_model_free(back);
}

TEST(CApiBasics, RewireStatsCsv) {
  const size_t ns[] = {20, 40};
  const int rs[] = {2, 4};
  char* csv = nullptr;
  ASSERT_EQ(grass_rewire_stats(ns, 2, rs, 2, 3, 0, 30, &csv), GRASS_OK);
  const std::string text = take(csv);
  EXPECT_EQ(text.rfind("n,r,seed,simple,edges,min_degree,max_degree,diameter,diameter_bound,"
                       "spectral_gap,spectral_bound",
                       0),
            0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 2 * 3);
  const int odd[] = {3};
  EXPECT_EQ(grass_rewire_stats(ns, 1, odd, 1, 1, 0, 30, &csv), GRASS_ERR_VALIDATION);
}

TEST(CApiBasics, GradcheckPasses) {
  char* report = nullptr;
  ASSERT_EQ(grass_gradcheck((std::string(GRASS_CONFIG_DIR) + "/zinc_desk.json").c_str(), 1, 1e-4,
                            &report),
            GRASS_OK);
  const json r = json::parse(take(report));
  EXPECT_TRUE(r["passed"].get<bool>());
}

}  // namespace
