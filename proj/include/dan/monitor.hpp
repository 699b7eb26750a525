// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dan {

enum class Severity : uint8_t { Debug = 0, Info = 1, Error = 2 };

char severity_letter(Severity s);
const char* severity_name(Severity s);
// Accepts "DEBUG"/"INFO"/"ERROR" and the single letters "D"/"I"/"E".
std::optional<Severity> parse_severity(std::string_view s);

struct Event {
  int64_t ts_ms = 0;  // UTC milliseconds since epoch
  Severity severity = Severity::Info;
  std::string source;  // short module name
  std::string code;    // dotted, [a-z_]+(\.[a-z_]+)+
  std::vector<std::pair<std::string, std::string>> attrs;
};

int64_t now_ms();
std::string iso8601_ms(int64_t ts_ms);
std::string xml_attr_escape(std::string_view s);

// One self-closing element with fixed attribute order (attrs sorted by key):
//   <ev t="1970-01-01T00:00:00.000Z" s="I" src="broker" c="cache.hit" k="T/1/v"/>
std::string event_to_xml(const Event& ev);

struct ThresholdRule {
  std::string counter;
  uint32_t window_s = 60;
  uint64_t limit = 1;
};

// Sliding event-time window per rule. A rule fires once when the increments
// inside (ts - window, ts] first exceed its limit, then re-arms only after the
// window has drained back to <= limit.
class ThresholdTracker {
 public:
  explicit ThresholdTracker(std::vector<ThresholdRule> rules);

  bool watches(std::string_view counter) const;
  // Records `delta` increments of `counter` at ts_ms; returns the
  // threshold.exceeded events to emit.
  std::vector<Event> record(std::string_view counter, int64_t ts_ms, uint64_t delta = 1);

 private:
  struct RuleState {
    ThresholdRule rule;
    std::deque<int64_t> hits;
    bool armed = true;
  };

  mutable std::mutex mu_;
  std::unordered_map<std::string, std::vector<RuleState>> by_counter_;
};

// Bounded drop-oldest queue between emitters and one subscriber.
class BoundedEventQueue {
 public:
  explicit BoundedEventQueue(size_t capacity) : capacity_(capacity) {}

  void push(std::string item);
  // Blocks until an item or stop; returns nullopt when stopped and drained.
  std::optional<std::string> pop();
  void stop();
  uint64_t drops() const;
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> q_;
  size_t capacity_;
  uint64_t drops_ = 0;
  bool stopped_ = false;
};

// Request outcomes; each fetch contributes exactly one, keeping
//   requests_total == l1_hits + l2_hits + backend_queries + upstream_queries
//                     + coalesced_requests + errors_total
// exact on every snapshot.
enum class Outcome { L1Hit, L2Hit, BackendQuery, UpstreamQuery, Coalesced, Error };

class Monitor {
 public:
  struct Options {
    std::string event_log_path;  // empty = no log file
    Severity min_log_severity = Severity::Info;
    std::vector<ThresholdRule> thresholds;
    size_t subscriber_queue_capacity = 1024;
  };

  Monitor();
  explicit Monitor(Options opt);
  ~Monitor();

  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  // Appends the XML form to the event log (severity permitting), feeds every
  // matching subscription and returns. Never blocks on subscriber consumption.
  void emit(Event ev);
  void emit(Severity sev, std::string source, std::string code,
            std::vector<std::pair<std::string, std::string>> attrs = {});

  // Sink writes one XML line to its connection; returns false when the
  // connection is gone (subscription then stops delivering).
  using Sink = std::function<bool(const std::string& xml)>;

  // One subscription per connection id; re-subscribing replaces it.
  void subscribe(uint64_t conn_id, Severity min_severity, Sink sink);
  void unsubscribe(uint64_t conn_id);
  size_t subscription_count() const;

  // Identity counters, updated as one atomic group per request outcome.
  void record_outcome(const std::string& table, Outcome outcome, uint64_t bytes);

  struct IdentitySnapshot {
    uint64_t requests_total = 0;
    uint64_t l1_hits = 0;
    uint64_t l2_hits = 0;
    uint64_t backend_queries = 0;
    uint64_t upstream_queries = 0;
    uint64_t coalesced_requests = 0;
    uint64_t errors_total = 0;
    uint64_t bytes_served = 0;
    std::map<std::string, uint64_t> per_table;
  };
  IdentitySnapshot identity_snapshot() const;

  // Named auxiliary counters ("backend.errors", "pool.timeouts", ...).
  void inc_counter(std::string_view name, uint64_t delta = 1);
  std::map<std::string, uint64_t> aux_counters() const;

  void set_min_log_severity(Severity s) { min_log_severity_ = s; }
  Severity min_log_severity() const { return min_log_severity_; }

  uint64_t error_events() const { return events_error_.load(); }
  uint64_t dropped_events() const { return events_dropped_.load(); }
  uint64_t log_failures() const { return log_failures_.load(); }

 private:
  struct Subscription {
    uint64_t id;
    Severity min_severity;
    Sink sink;
    BoundedEventQueue queue;
    std::thread worker;

    Subscription(uint64_t i, Severity s, Sink snk, size_t cap)
        : id(i), min_severity(s), sink(std::move(snk)), queue(cap) {}
  };

  void feed_thresholds(std::string_view counter, uint64_t delta);
  void stop_subscription(std::shared_ptr<Subscription> sub);

  std::atomic<Severity> min_log_severity_;
  size_t queue_capacity_;

  std::mutex log_mu_;
  std::ofstream log_;

  mutable std::mutex subs_mu_;
  std::unordered_map<uint64_t, std::shared_ptr<Subscription>> subs_;

  mutable std::mutex identity_mu_;
  IdentitySnapshot identity_;

  mutable std::mutex aux_mu_;
  std::map<std::string, uint64_t> aux_;

  ThresholdTracker thresholds_;
  bool watch_identity_[8] = {};  // which identity counters have rules

  std::atomic<uint64_t> events_error_{0};
  std::atomic<uint64_t> events_dropped_{0};
  std::atomic<uint64_t> log_failures_{0};
};

}  // namespace dan
