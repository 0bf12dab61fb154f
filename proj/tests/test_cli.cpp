// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;  // stdout and stderr combined
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string("\"") + GRASS_CLI_PATH + "\" " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("grass_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string p(const std::string& name) const { return "\"" + (dir_ / name).string() + "\""; }
  fs::path dir_;
};

TEST_F(Cli, HelpAndVersion) {
  EXPECT_EQ(run("--help").code, 0);
  const CliResult v = run("--version");
  EXPECT_EQ(v.code, 0);
  EXPECT_FALSE(v.out.empty());
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("validate-data").code, 2);
  EXPECT_EQ(run("rewire-stats --n 10 --r two").code, 2);
}

TEST_F(Cli, MissingFileNamesThePath) {
  const CliResult r = run("validate-data --data " + p("absent.jsonl"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("absent.jsonl"), std::string::npos) << r.out;
}

TEST_F(Cli, EmptyAndBadHeaderFiles) {
  std::ofstream(dir_ / "empty.jsonl").close();
  EXPECT_EQ(run("validate-data --data " + p("empty.jsonl")).code, 0);
  std::ofstream(dir_ / "bad.jsonl") << "{\"schema\":\"nope\"}\n";
  EXPECT_EQ(run("validate-data --data " + p("bad.jsonl")).code, 3);
}

TEST_F(Cli, InvalidLinesExitThree) {
  std::ofstream(dir_ / "lines.jsonl") << "{\"schema\":\"grass-jsonl/1\"}\n{\"num_nodes\":1}\n";
  const CliResult r = run("validate-data --data " + p("lines.jsonl"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
}

TEST_F(Cli, SynthPreprocessTrainEval) {
  ASSERT_EQ(run("synth --out " + p("d.jsonl") + " --count 6 --seed 1").code, 0);
  EXPECT_EQ(run("validate-data --data " + p("d.jsonl")).code, 0);
  const CliResult pre = run("preprocess --data " + p("d.jsonl") + " --cache " + p("d.cache") + " --k 4");
  EXPECT_EQ(pre.code, 0);
  EXPECT_NE(pre.out.find("computed"), std::string::npos);
  const CliResult hit = run("preprocess --data " + p("d.jsonl") + " --cache " + p("d.cache") + " --k 4");
  EXPECT_NE(hit.out.find("hit"), std::string::npos) << hit.out;

  // train without a cache points at preprocess
  const std::string cfg = std::string("\"") + GRASS_CONFIG_DIR + "/zinc_desk.json\"";
  const CliResult nocache = run("train --config " + cfg + " --data " + p("d.jsonl") + " --cache " +
                          p("none.cache") + " --out " + p("run"));
  EXPECT_EQ(nocache.code, 3);
  EXPECT_NE(nocache.out.find("preprocess"), std::string::npos) << nocache.out;

  // k mismatch between cache (4) and config (16)
  const CliResult mismatch = run("train --config " + cfg + " --data " + p("d.jsonl") + " --cache " +
                           p("d.cache") + " --out " + p("run"));
  EXPECT_EQ(mismatch.code, 3);
}

TEST_F(Cli, CorruptCheckpointExitsThree) {
  ASSERT_EQ(run("synth --out " + p("d.jsonl") + " --count 3 --seed 1").code, 0);
  std::ofstream(dir_ / "x.ckpt") << "GRCK garbage";
  EXPECT_EQ(run("eval --checkpoint " + p("x.ckpt") + " --data " + p("d.jsonl")).code, 3);
}

TEST_F(Cli, RewireStatsWritesCsv) {
  const CliResult r = run("rewire-stats --n 30 --r 2,4 --seeds 2 --out " + p("s.csv"));
  EXPECT_EQ(r.code, 0) << r.out;
  std::ifstream in(dir_ / "s.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("n,r,seed,simple", 0), 0u);
  EXPECT_EQ(run("rewire-stats --n 30 --r 3").code, 3);
}

}  // namespace
