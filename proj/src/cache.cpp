// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/cache.hpp"

#include <atomic>
#include <cstring>
#include <fstream>
#include <thread>

#include "binio.hpp"
#include "grass/error.hpp"

namespace grass {

namespace {

constexpr char kMagic[4] = {'G', 'R', 'W', 'P'};
constexpr ErrorKind kBad = ErrorKind::cache_invalid;

}  // namespace

GraphEncoding encode_graph(const Graph& g, std::size_t k) {
  return GraphEncoding{rrwp(g, k), degree_table(g)};
}

void write_cache(const std::filesystem::path& path, const EncodingCache& cache) {
  binio::Writer w;
  w.raw(kMagic, 4);
  w.put<std::uint32_t>(EncodingCache::kVersion);
  w.put<std::uint64_t>(cache.dataset_hash);
  w.put<std::uint32_t>(cache.k);
  w.put<std::uint64_t>(cache.graphs.size());
  for (const GraphEncoding& ge : cache.graphs) {
    const RrwpTensor& p = ge.rrwp;
    require(p.k() == cache.k, "cache entry has mismatched k");
    const std::size_t n = p.num_nodes();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
    w.put<std::uint64_t>(p.nnz());
    std::vector<double> diag(n * p.k());
    for (std::size_t i = 0; i < n; ++i) {
      p.pair(static_cast<Index>(i), static_cast<Index>(i),
             std::span<double>(diag.data() + i * p.k(), p.k()));
    }
    w.raw(diag.data(), diag.size() * sizeof(double));
    for (std::size_t v : p.row_ptr()) w.put<std::uint64_t>(v);
    w.raw(p.cols().data(), p.cols().size() * sizeof(Index));
    w.raw(p.values().data(), p.values().size() * sizeof(double));
    require(ge.degrees.out_degree.size() == n && ge.degrees.in_degree.size() == n,
            "cache entry has mismatched degree table");
    w.raw(ge.degrees.out_degree.data(), n * sizeof(Index));
    w.raw(ge.degrees.in_degree.data(), n * sizeof(Index));
  }
  binio::commit(path, w);
}

EncodingCache read_cache(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::io, "cache '" + path.string() + "' not found");
  const std::vector<char> bytes = binio::slurp(path, ErrorKind::io);
  if (bytes.size() < 4 + 4 + 8 + 4 + 8 + 4) fail(kBad, "cache truncated");
  const std::size_t body = binio::check_crc(bytes, kBad);
  binio::Reader r(bytes.data(), body, kBad);
  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) fail(ErrorKind::cache_invalid, "not a cache file");
  const auto version = r.get<std::uint32_t>();
  if (version != EncodingCache::kVersion) {
    fail(ErrorKind::cache_invalid, "unsupported cache version " + std::to_string(version));
  }
  EncodingCache c;
  c.dataset_hash = r.get<std::uint64_t>();
  c.k = r.get<std::uint32_t>();
  if (c.k == 0) fail(ErrorKind::cache_invalid, "cache has k = 0");
  const auto count = r.get<std::uint64_t>();
  r.expect(count, 4 + 8, "graph count");
  c.graphs.reserve(count);
  for (std::uint64_t g = 0; g < count; ++g) {
    const std::size_t n = r.get<std::uint32_t>();
    const auto nnz = r.get<std::uint64_t>();
    r.expect(n, c.k * sizeof(double), "diagonal");
    std::vector<double> diag(n * c.k);
    r.take(diag.data(), diag.size() * sizeof(double));
    r.expect(n + 1, sizeof(std::uint64_t), "row pointers");
    std::vector<std::size_t> row_ptr(n + 1);
    for (auto& v : row_ptr) v = r.get<std::uint64_t>();
    r.expect(nnz, sizeof(Index) + c.k * sizeof(double), "entries");
    std::vector<Index> cols(nnz);
    r.take(cols.data(), nnz * sizeof(Index));
    std::vector<double> values(nnz * c.k);
    r.take(values.data(), values.size() * sizeof(double));
    GraphEncoding ge;
    try {
      ge.rrwp = RrwpTensor(n, c.k, std::move(row_ptr), std::move(cols), std::move(values));
    } catch (const Error& e) {
      fail(ErrorKind::cache_invalid, std::string("cache entry malformed: ") + e.what());
    }
    std::vector<double> d(c.k);
    for (std::size_t i = 0; i < n; ++i) {
      ge.rrwp.pair(static_cast<Index>(i), static_cast<Index>(i), d);
      if (std::memcmp(d.data(), diag.data() + i * c.k, c.k * sizeof(double)) != 0) {
        fail(ErrorKind::cache_invalid, "cache diagonal disagrees with entries");
      }
    }
    r.expect(2 * n, sizeof(Index), "degrees");
    ge.degrees.out_degree.resize(n);
    ge.degrees.in_degree.resize(n);
    r.take(ge.degrees.out_degree.data(), n * sizeof(Index));
    r.take(ge.degrees.in_degree.data(), n * sizeof(Index));
    for (std::size_t i = 0; i < n; ++i) {
      ge.degrees.max_out = std::max(ge.degrees.max_out, ge.degrees.out_degree[i]);
      ge.degrees.max_in = std::max(ge.degrees.max_in, ge.degrees.in_degree[i]);
    }
    c.graphs.push_back(std::move(ge));
  }
  if (r.remaining() != 0) fail(ErrorKind::cache_invalid, "trailing bytes in cache");
  return c;
}

CacheProbe probe_cache(const std::filesystem::path& path) {
  CacheProbe p;
  std::ifstream in(path, std::ios::binary);
  if (!in) return p;
  p.exists = true;
  char head[4 + 4 + 8 + 4];
  in.read(head, sizeof head);
  if (in.gcount() != static_cast<std::streamsize>(sizeof head) || std::memcmp(head, kMagic, 4) != 0) {
    return p;
  }
  std::memcpy(&p.dataset_hash, head + 8, 8);
  std::memcpy(&p.k, head + 16, 4);
  return p;
}

EncodingCache compute_encodings(const Dataset& ds, std::size_t k, unsigned jobs) {
  require(k >= 1, "walk length k must be >= 1");
  EncodingCache c;
  c.dataset_hash = ds.content_hash;
  c.k = static_cast<std::uint32_t>(k);
  c.graphs.resize(ds.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, ds.size()))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::size_t i = next++; i < ds.size() && !failed; i = next++) {
        c.graphs[i] = encode_graph(*ds.samples[i].graph, k);
      }
    } catch (...) {
      if (!failed.exchange(true)) err = std::current_exception();
    }
  };
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return c;
}

PrecomputeResult precompute_cache(const std::filesystem::path& dataset_path, std::size_t k,
                                  const std::filesystem::path& cache_path, unsigned jobs) {
  require(k >= 1, "walk length k must be >= 1");
  const std::uint64_t hash = file_hash(dataset_path);
  if (std::filesystem::exists(cache_path)) {
    // full read validates the checksum; corrupt caches are reported, not rebuilt
    const EncodingCache existing = read_cache(cache_path);
    if (existing.dataset_hash == hash && existing.k == k) {
      return {true, existing.graphs.size()};
    }
  }
  const Dataset ds = read_jsonl(dataset_path);
  const EncodingCache c = compute_encodings(ds, k, jobs);
  write_cache(cache_path, c);
  return {false, c.graphs.size()};
}

}  // namespace grass
