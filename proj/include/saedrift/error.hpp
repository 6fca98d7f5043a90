// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace saedrift {

enum class ErrorKind {
  shape,
  empty_input,
  range,
  storage,
  format,
  corruption,
  validation,
  config,
  divergence,
  index,
  already_pooled,
  needs_tokens,
  metadata,
  pairing,
  provenance,
  degenerate_vector,
  insufficient_samples,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::empty_input: return "empty-input error";
    case ErrorKind::range: return "range error";
    case ErrorKind::storage: return "storage error";
    case ErrorKind::format: return "format error";
    case ErrorKind::corruption: return "corruption error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::config: return "config error";
    case ErrorKind::divergence: return "divergence error";
    case ErrorKind::index: return "index error";
    case ErrorKind::already_pooled: return "already-pooled error";
    case ErrorKind::needs_tokens: return "needs-tokens error";
    case ErrorKind::metadata: return "metadata error";
    case ErrorKind::pairing: return "pairing error";
    case ErrorKind::provenance: return "provenance error";
    case ErrorKind::degenerate_vector: return "degenerate-vector error";
    case ErrorKind::insufficient_samples: return "insufficient-samples error";
  }
  return "error";
}

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace saedrift
