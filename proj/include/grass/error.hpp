// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace grass {

enum class ErrorKind {
  validation,
  data,
  io,
  cache_invalid,
  numeric,
  usage,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type used across the library. The kind decides the
/// status code returned through the C API and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::validation, what);
}

}  // namespace grass
