// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grass/graph.hpp"

namespace grass {

inline constexpr const char* kJsonlSchema = "grass-jsonl/1";

struct Sample {
  GraphPtr graph;
  std::vector<double> target;
};

struct Dataset {
  std::vector<Sample> samples;
  std::uint64_t content_hash = 0;

  std::size_t size() const noexcept { return samples.size(); }
};

/// First line: {"schema": "grass-jsonl/1"}. Then one graph object per line.
/// Undirected graphs list each edge once.
Dataset read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const Dataset& ds);

/// Parses a single graph line (without the header).
Sample parse_sample(const std::string& line);
std::string format_sample(const Sample& s);

struct DatasetReport {
  std::size_t graphs = 0;
  std::size_t invalid_lines = 0;
  double avg_nodes = 0.0;
  double avg_edges = 0.0;  // undirected graphs count each edge once
  std::vector<std::string> problems;  // "line N: <field>: <message>"
};

/// Per-line schema check. A missing file or bad header throws a data error;
/// malformed graph lines are reported, not thrown.
DatasetReport validate_dataset(const std::filesystem::path& path);

/// 64-bit FNV-1a of the file bytes.
std::uint64_t file_hash(const std::filesystem::path& path);
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace grass
