// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "grass/dataset.hpp"
#include "grass/encode.hpp"

namespace grass {

/// Precomputed structure of one input graph.
struct GraphEncoding {
  RrwpTensor rrwp;
  DegreeTable degrees;

  friend bool operator==(const GraphEncoding&, const GraphEncoding&) = default;
};

GraphEncoding encode_graph(const Graph& g, std::size_t k);

/// Binary layout, little-endian:
///   "GRWP" | u32 version | u64 dataset hash | u32 k | u64 graph count
///   per graph: u32 n | u64 nnz | n*k f64 diagonal | (n+1) u64 row_ptr |
///              nnz u32 cols | nnz*k f64 values | n u32 out | n u32 in
///   u32 crc32 of everything before it
struct EncodingCache {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t dataset_hash = 0;
  std::uint32_t k = 0;
  std::vector<GraphEncoding> graphs;
};

void write_cache(const std::filesystem::path& path, const EncodingCache& cache);
/// Throws ErrorKind::cache_invalid on any structural or checksum problem.
EncodingCache read_cache(const std::filesystem::path& path);

/// Header-only probe; nullopt-like {false} when the file is absent.
struct CacheProbe {
  bool exists = false;
  std::uint64_t dataset_hash = 0;
  std::uint32_t k = 0;
};
CacheProbe probe_cache(const std::filesystem::path& path);

struct PrecomputeResult {
  bool cache_hit = false;
  std::size_t graphs = 0;
};

/// Computes walk probabilities and degree tables for every graph in the
/// dataset. If `cache_path` already holds a valid cache for the same
/// (dataset, k) nothing is recomputed. A present but corrupt cache is an
/// error, never silently rebuilt.
PrecomputeResult precompute_cache(const std::filesystem::path& dataset_path, std::size_t k,
                                  const std::filesystem::path& cache_path, unsigned jobs = 1);

EncodingCache compute_encodings(const Dataset& ds, std::size_t k, unsigned jobs = 1);

}  // namespace grass
