// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

// Little helpers shared by the binary cache and checkpoint formats.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <zlib.h>

#include "grass/error.hpp"

namespace grass::binio {

class Writer {
 public:
  template <class T>
  void put(T v) {
    raw(&v, sizeof(T));
  }
  void raw(const void* data, std::size_t len) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + len);
  }
  std::vector<char>& bytes() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t len, ErrorKind kind) : p_(data), end_(data + len), kind_(kind) {}

  template <class T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  void take(void* out, std::size_t len) {
    if (remaining() < len) fail(kind_, "file truncated");
    std::memcpy(out, p_, len);
    p_ += len;
  }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }
  /// Guards allocations sized from on-disk counts.
  void expect(std::uint64_t count, std::size_t elem, const char* what) const {
    if (elem != 0 && count > remaining() / elem) fail(kind_, std::string("file truncated in ") + what);
  }

 private:
  const char* p_;
  const char* end_;
  ErrorKind kind_;
};

inline std::uint32_t crc_of(const char* data, std::size_t len) {
  uLong c = crc32(0L, Z_NULL, 0);
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

inline std::vector<char> slurp(const std::filesystem::path& path, ErrorKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(kind, "cannot open '" + path.string() + "'");
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Appends the crc and writes atomically through a temporary file.
inline void commit(const std::filesystem::path& path, Writer& w) {
  const std::uint32_t crc = crc_of(w.bytes().data(), w.bytes().size());
  w.put(crc);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) fail(ErrorKind::io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

/// Verifies the trailing crc; returns the body length.
inline std::size_t check_crc(const std::vector<char>& bytes, ErrorKind kind) {
  if (bytes.size() < 4) fail(kind, "file truncated");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (crc_of(bytes.data(), body) != stored) fail(kind, "checksum mismatch");
  return body;
}

}  // namespace grass::binio
