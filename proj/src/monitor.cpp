// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/monitor.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>

#include "dan/errors.hpp"

namespace dan {

char severity_letter(Severity s) {
  switch (s) {
    case Severity::Debug: return 'D';
    case Severity::Info: return 'I';
    case Severity::Error: return 'E';
  }
  return '?';
}

const char* severity_name(Severity s) {
  switch (s) {
    case Severity::Debug: return "DEBUG";
    case Severity::Info: return "INFO";
    case Severity::Error: return "ERROR";
  }
  return "?";
}

std::optional<Severity> parse_severity(std::string_view s) {
  if (s == "DEBUG" || s == "D") return Severity::Debug;
  if (s == "INFO" || s == "I") return Severity::Info;
  if (s == "ERROR" || s == "E") return Severity::Error;
  return std::nullopt;
}

int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string iso8601_ms(int64_t ts_ms) {
  time_t secs = static_cast<time_t>(ts_ms / 1000);
  int ms = static_cast<int>(ts_ms % 1000);
  if (ms < 0) {
    ms += 1000;
    secs -= 1;
  }
  struct tm tm_utc{};
  gmtime_r(&secs, &tm_utc);
  char buf[40];
  size_t n = strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm_utc);
  snprintf(buf + n, sizeof(buf) - n, ".%03dZ", ms);
  return buf;
}

std::string xml_attr_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string event_to_xml(const Event& ev) {
  std::string out = "<ev t=\"" + iso8601_ms(ev.ts_ms) + "\"";
  out += " s=\"";
  out += severity_letter(ev.severity);
  out += "\" src=\"" + xml_attr_escape(ev.source) + "\"";
  out += " c=\"" + xml_attr_escape(ev.code) + "\"";
  auto sorted = ev.attrs;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [k, v] : sorted) {
    out += " " + k + "=\"" + xml_attr_escape(v) + "\"";
  }
  out += "/>";
  return out;
}

// ---------------------------------------------------------------------------
// ThresholdTracker

ThresholdTracker::ThresholdTracker(std::vector<ThresholdRule> rules) {
  for (auto& r : rules) {
    by_counter_[r.counter].push_back(RuleState{std::move(r), {}, true});
  }
}

bool ThresholdTracker::watches(std::string_view counter) const {
  std::lock_guard lk(mu_);
  return by_counter_.find(std::string(counter)) != by_counter_.end();
}

std::vector<Event> ThresholdTracker::record(std::string_view counter, int64_t ts_ms,
                                            uint64_t delta) {
  std::vector<Event> fired;
  if (delta == 0) return fired;
  std::lock_guard lk(mu_);
  auto it = by_counter_.find(std::string(counter));
  if (it == by_counter_.end()) return fired;
  for (auto& st : it->second) {
    const int64_t window_ms = static_cast<int64_t>(st.rule.window_s) * 1000;
    // Window is (ts - window, ts]: drain events older than the window first,
    // re-arm if the drained window is back at or below the limit, then add.
    while (!st.hits.empty() && st.hits.front() <= ts_ms - window_ms) st.hits.pop_front();
    if (!st.armed && st.hits.size() <= st.rule.limit) st.armed = true;
    for (uint64_t i = 0; i < delta; ++i) st.hits.push_back(ts_ms);
    if (st.armed && st.hits.size() > st.rule.limit) {
      st.armed = false;
      Event ev;
      ev.ts_ms = ts_ms;
      ev.severity = Severity::Error;
      ev.source = "monitor";
      ev.code = "threshold.exceeded";
      ev.attrs = {{"counter", st.rule.counter},
                  {"window_s", std::to_string(st.rule.window_s)},
                  {"limit", std::to_string(st.rule.limit)},
                  {"observed", std::to_string(st.hits.size())}};
      fired.push_back(std::move(ev));
    }
  }
  return fired;
}

// ---------------------------------------------------------------------------
// BoundedEventQueue

void BoundedEventQueue::push(std::string item) {
  std::lock_guard lk(mu_);
  if (stopped_) return;
  if (q_.size() >= capacity_) {
    q_.pop_front();
    ++drops_;
  }
  q_.push_back(std::move(item));
  cv_.notify_one();
}

std::optional<std::string> BoundedEventQueue::pop() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return stopped_ || !q_.empty(); });
  if (q_.empty()) return std::nullopt;
  std::string item = std::move(q_.front());
  q_.pop_front();
  return item;
}

void BoundedEventQueue::stop() {
  std::lock_guard lk(mu_);
  stopped_ = true;
  cv_.notify_all();
}

uint64_t BoundedEventQueue::drops() const {
  std::lock_guard lk(mu_);
  return drops_;
}

size_t BoundedEventQueue::size() const {
  std::lock_guard lk(mu_);
  return q_.size();
}

// ---------------------------------------------------------------------------
// Monitor

namespace {

constexpr const char* kIdentityNames[8] = {
    "requests_total", "l1_hits",            "l2_hits",      "backend_queries",
    "upstream_queries", "coalesced_requests", "errors_total", "bytes_served"};

int identity_index(Outcome o) {
  switch (o) {
    case Outcome::L1Hit: return 1;
    case Outcome::L2Hit: return 2;
    case Outcome::BackendQuery: return 3;
    case Outcome::UpstreamQuery: return 4;
    case Outcome::Coalesced: return 5;
    case Outcome::Error: return 6;
  }
  return 6;
}

}  // namespace

Monitor::Monitor() : Monitor(Options{}) {}

Monitor::Monitor(Options opt)
    : min_log_severity_(opt.min_log_severity),
      queue_capacity_(opt.subscriber_queue_capacity),
      thresholds_(opt.thresholds) {
  if (!opt.event_log_path.empty()) {
    const auto parent = std::filesystem::path(opt.event_log_path).parent_path();
    if (!parent.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(parent, ec);
    }
    log_.open(opt.event_log_path, std::ios::app);
    if (!log_) {
      throw DanError(Err::Io, "cannot open event log " + opt.event_log_path);
    }
  }
  for (int i = 0; i < 8; ++i) {
    watch_identity_[i] = thresholds_.watches(kIdentityNames[i]);
  }
}

Monitor::~Monitor() {
  std::vector<std::shared_ptr<Subscription>> subs;
  {
    std::lock_guard lk(subs_mu_);
    for (auto& [id, sub] : subs_) subs.push_back(sub);
    subs_.clear();
  }
  for (auto& sub : subs) stop_subscription(sub);
}

void Monitor::emit(Event ev) {
  if (ev.severity == Severity::Error) events_error_.fetch_add(1);

  const bool log_it = log_.is_open() && ev.severity >= min_log_severity_.load();

  std::vector<std::shared_ptr<Subscription>> interested;
  {
    std::lock_guard lk(subs_mu_);
    for (auto& [id, sub] : subs_) {
      if (ev.severity >= sub->min_severity) interested.push_back(sub);
    }
  }
  if (!log_it && interested.empty()) return;

  const std::string xml = event_to_xml(ev);
  if (log_it) {
    std::lock_guard lk(log_mu_);
    log_ << xml << '\n';
    log_.flush();
    if (!log_) {
      log_failures_.fetch_add(1);
      log_.clear();
    }
  }
  for (auto& sub : interested) {
    const uint64_t before = sub->queue.drops();
    sub->queue.push(xml);
    const uint64_t dropped = sub->queue.drops() - before;
    if (dropped) events_dropped_.fetch_add(dropped);
  }
}

void Monitor::emit(Severity sev, std::string source, std::string code,
                   std::vector<std::pair<std::string, std::string>> attrs) {
  Event ev;
  ev.ts_ms = now_ms();
  ev.severity = sev;
  ev.source = std::move(source);
  ev.code = std::move(code);
  ev.attrs = std::move(attrs);
  emit(std::move(ev));
}

void Monitor::subscribe(uint64_t conn_id, Severity min_severity, Sink sink) {
  auto sub = std::make_shared<Subscription>(conn_id, min_severity, std::move(sink),
                                            queue_capacity_);
  sub->worker = std::thread([sub] {
    while (auto xml = sub->queue.pop()) {
      if (!sub->sink(*xml)) break;
    }
  });

  std::shared_ptr<Subscription> old;
  {
    std::lock_guard lk(subs_mu_);
    auto it = subs_.find(conn_id);
    if (it != subs_.end()) {
      old = it->second;
      it->second = sub;
    } else {
      subs_.emplace(conn_id, sub);
    }
  }
  if (old) stop_subscription(old);
}

void Monitor::unsubscribe(uint64_t conn_id) {
  std::shared_ptr<Subscription> sub;
  {
    std::lock_guard lk(subs_mu_);
    auto it = subs_.find(conn_id);
    if (it == subs_.end()) return;
    sub = it->second;
    subs_.erase(it);
  }
  stop_subscription(sub);
}

void Monitor::stop_subscription(std::shared_ptr<Subscription> sub) {
  sub->queue.stop();
  if (sub->worker.joinable()) sub->worker.join();
}

size_t Monitor::subscription_count() const {
  std::lock_guard lk(subs_mu_);
  return subs_.size();
}

void Monitor::record_outcome(const std::string& table, Outcome outcome, uint64_t bytes) {
  {
    std::lock_guard lk(identity_mu_);
    ++identity_.requests_total;
    switch (outcome) {
      case Outcome::L1Hit: ++identity_.l1_hits; break;
      case Outcome::L2Hit: ++identity_.l2_hits; break;
      case Outcome::BackendQuery: ++identity_.backend_queries; break;
      case Outcome::UpstreamQuery: ++identity_.upstream_queries; break;
      case Outcome::Coalesced: ++identity_.coalesced_requests; break;
      case Outcome::Error: ++identity_.errors_total; break;
    }
    identity_.bytes_served += bytes;
    ++identity_.per_table[table];
  }
  if (watch_identity_[0]) feed_thresholds("requests_total", 1);
  const int idx = identity_index(outcome);
  if (watch_identity_[idx]) feed_thresholds(kIdentityNames[idx], 1);
}

Monitor::IdentitySnapshot Monitor::identity_snapshot() const {
  std::lock_guard lk(identity_mu_);
  return identity_;
}

void Monitor::inc_counter(std::string_view name, uint64_t delta) {
  {
    std::lock_guard lk(aux_mu_);
    aux_[std::string(name)] += delta;
  }
  feed_thresholds(name, delta);
}

std::map<std::string, uint64_t> Monitor::aux_counters() const {
  std::lock_guard lk(aux_mu_);
  return aux_;
}

void Monitor::feed_thresholds(std::string_view counter, uint64_t delta) {
  for (auto& ev : thresholds_.record(counter, now_ms(), delta)) {
    emit(std::move(ev));
  }
}

}  // namespace dan
