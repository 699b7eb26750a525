// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "dan/backend.hpp"
#include "dan/cache.hpp"
#include "dan/errors.hpp"
#include "dan/monitor.hpp"
#include "dan/object.hpp"
#include "dan/pool.hpp"
#include "dan/schemagen.hpp"

namespace dan {

enum class Source { L1, L2, Backend, Upstream };
const char* source_name(Source s);

struct FetchOutcome {
  PayloadPtr payload;
  Source source = Source::L1;
  bool coalesced = false;
  double latency_ms = 0;
};

struct BrokerConfig {
  uint32_t max_inflight_keys = 1024;
  uint32_t fetch_timeout_ms = 5000;
};

// Where misses are resolved: the pooled backend (DIRECT) or the parent
// server (PROXY).
class Origin {
 public:
  virtual ~Origin() = default;
  virtual Bytes fetch(const CalibKey& key) = 0;  // throws DanError
  virtual Source source() const = 0;
};

// DIRECT mode: query through the session pool, re-encode canonically, and
// gate the decoded rows against the mapping descriptors when present.
class DirectOrigin : public Origin {
 public:
  DirectOrigin(FileBackend& backend, SessionPool& pool, const DescriptorSet* descriptors)
      : backend_(backend), pool_(pool), descriptors_(descriptors) {}

  Bytes fetch(const CalibKey& key) override;
  Source source() const override { return Source::Backend; }

 private:
  FileBackend& backend_;
  SessionPool& pool_;
  const DescriptorSet* descriptors_;
};

// Read-through fetch pipeline with request consolidation. Concurrent misses
// of one key collapse to a single origin fetch; the result is stored through
// both tiers and fanned out to every waiter.
class Broker {
 public:
  Broker(BrokerConfig cfg, TieredCache& cache, Origin& origin, Monitor& monitor);

  // Throws DanError: NotFound, BackendUnavailable, Overloaded, Timeout,
  // or Internal (origin corruption / schema mismatch).
  FetchOutcome fetch(const CalibKey& key);

  void set_max_inflight(uint32_t m) { max_inflight_.store(m); }
  uint32_t max_inflight() const { return max_inflight_.load(); }
  uint32_t fetch_timeout_ms() const { return fetch_timeout_ms_; }
  size_t inflight_size() const;

 private:
  struct Flight {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    bool failed = false;
    PayloadPtr payload;
    Source source = Source::Backend;
    Err err = Err::Internal;
    std::string err_detail;
    std::chrono::steady_clock::time_point start;
    int waiters = 0;
  };

  FetchOutcome lead(const CalibKey& key, const std::string& key_string,
                    const std::shared_ptr<Flight>& flight,
                    std::chrono::steady_clock::time_point t0);
  FetchOutcome follow(const CalibKey& key, const std::shared_ptr<Flight>& flight,
                      std::chrono::steady_clock::time_point t0);
  [[noreturn]] void fail_request(const CalibKey& key, Err err, const std::string& detail,
                                 bool emit_event);

  TieredCache& cache_;
  Origin& origin_;
  Monitor& monitor_;
  std::atomic<uint32_t> max_inflight_;
  uint32_t fetch_timeout_ms_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Flight>> inflight_;
};

}  // namespace dan
