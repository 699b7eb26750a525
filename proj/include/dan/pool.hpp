// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <type_traits>
#include <utility>

#include "dan/errors.hpp"

namespace dan {

struct PoolConfig {
  uint32_t max_connections = 4;
  uint32_t acquire_timeout_ms = 1000;
};

// Bounded set of backend sessions. Acquisition is FIFO among waiters; in_use
// never exceeds max_connections. max_connections may be lowered at runtime:
// sessions above the new cap drain naturally, none are admitted anew.
class SessionPool {
 public:
  explicit SessionPool(PoolConfig cfg);

  class Lease {
   public:
    Lease(Lease&& other) noexcept : pool_(other.pool_) { other.pool_ = nullptr; }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Lease& operator=(Lease&&) = delete;
    ~Lease();

   private:
    friend class SessionPool;
    explicit Lease(SessionPool* p) : pool_(p) {}
    SessionPool* pool_;
  };

  // Blocks until a slot frees; throws PoolTimeout after acquire_timeout_ms.
  Lease acquire();

  // Runs work holding a slot; the slot is released on every exit path.
  template <class F>
  std::invoke_result_t<F&> with_session(F&& work) {
    Lease lease = acquire();
    return std::forward<F>(work)();
  }

  void set_max_connections(uint32_t m);

  struct State {
    uint32_t max_connections = 0;
    uint32_t in_use = 0;
    uint32_t waiters = 0;
    uint32_t peak_in_use = 0;
    uint64_t total_acquired = 0;
    uint64_t timeouts = 0;
  };
  State state() const;

 private:
  friend class Lease;
  void release();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  uint32_t max_;
  uint32_t acquire_timeout_ms_;
  uint32_t in_use_ = 0;
  uint32_t peak_in_use_ = 0;
  uint64_t total_acquired_ = 0;
  uint64_t timeouts_ = 0;
  uint64_t next_ticket_ = 0;
  std::deque<uint64_t> queue_;
};

}  // namespace dan
