// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dan {

enum class Err {
  NotFound,
  BackendUnavailable,
  Overloaded,
  Malformed,
  Timeout,
  PoolTimeout,
  Corrupt,
  WormViolation,
  LimitExceeded,
  Io,
  Schema,
  Internal,
};

const char* err_name(Err e);

// Protocol error codes carried in ERROR frames.
// 1 NOT_FOUND, 2 BACKEND_UNAVAILABLE, 3 OVERLOADED, 4 MALFORMED, 5 TIMEOUT, 6 INTERNAL.
int wire_code(Err e);

// what() carries the detail only; callers that surface errors to humans
// prepend err_name(kind()) themselves, so re-wrapped errors do not nest
// prefixes.
class DanError : public std::runtime_error {
 public:
  DanError(Err kind, std::string detail) : std::runtime_error(detail), kind_(kind) {}

  Err kind() const { return kind_; }

 private:
  Err kind_;
};

}  // namespace dan
