// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/broker.hpp"

namespace dan {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Client-visible error kind for an origin failure.
Err map_origin_err(Err e) {
  switch (e) {
    case Err::NotFound:
    case Err::BackendUnavailable:
    case Err::Timeout:
      return e;
    case Err::PoolTimeout:
      return Err::Timeout;
    default:
      return Err::Internal;  // corruption, schema mismatch, io
  }
}

}  // namespace

Bytes DirectOrigin::fetch(const CalibKey& key) {
  RowSet rows = pool_.with_session([&] { return backend_.query(key); });
  if (descriptors_) descriptors_->validate(key.table, rows.columns);
  return encode_object(key, rows);
}

const char* source_name(Source s) {
  switch (s) {
    case Source::L1: return "L1";
    case Source::L2: return "L2";
    case Source::Backend: return "BACKEND";
    case Source::Upstream: return "UPSTREAM";
  }
  return "?";
}

Broker::Broker(BrokerConfig cfg, TieredCache& cache, Origin& origin, Monitor& monitor)
    : cache_(cache),
      origin_(origin),
      monitor_(monitor),
      max_inflight_(cfg.max_inflight_keys),
      fetch_timeout_ms_(cfg.fetch_timeout_ms) {
  if (cfg.max_inflight_keys < 1) throw DanError(Err::Malformed, "max_inflight_keys must be >= 1");
  if (cfg.fetch_timeout_ms < 1) throw DanError(Err::Malformed, "fetch_timeout_ms must be >= 1");
}

size_t Broker::inflight_size() const {
  std::lock_guard lk(mu_);
  return inflight_.size();
}

FetchOutcome Broker::fetch(const CalibKey& key) {
  const auto t0 = Clock::now();
  if (!valid_key(key)) {
    fail_request(key, Err::Malformed, "invalid key", true);
  }

  if (auto hit = cache_.lookup(key)) {
    const bool l1 = hit->tier == CacheTier::L1;
    monitor_.record_outcome(key.table, l1 ? Outcome::L1Hit : Outcome::L2Hit,
                            hit->payload->size());
    monitor_.emit(Severity::Debug, "broker", "cache.hit",
                  {{"k", cache_key_string(key)}, {"tier", l1 ? "L1" : "L2"}});
    return FetchOutcome{std::move(hit->payload), l1 ? Source::L1 : Source::L2, false,
                        ms_since(t0)};
  }

  const std::string ks = cache_key_string(key);
  std::shared_ptr<Flight> flight;
  bool leader = false;
  size_t inflight_now = 0;
  {
    std::lock_guard lk(mu_);
    auto it = inflight_.find(ks);
    if (it != inflight_.end()) {
      flight = it->second;
      std::lock_guard flk(flight->mu);
      ++flight->waiters;
    } else if (inflight_.size() < max_inflight_.load()) {
      flight = std::make_shared<Flight>();
      flight->start = t0;
      inflight_.emplace(ks, flight);
      leader = true;
    } else {
      inflight_now = inflight_.size();
    }
  }
  if (!flight) {
    fail_request(key, Err::Overloaded,
                 "in-flight table full (" + std::to_string(inflight_now) + " keys)", true);
  }
  return leader ? lead(key, ks, flight, t0) : follow(key, flight, t0);
}

FetchOutcome Broker::lead(const CalibKey& key, const std::string& key_string,
                          const std::shared_ptr<Flight>& flight, Clock::time_point t0) {
  PayloadPtr payload;
  Err err{};
  std::string err_detail;
  bool ok = false;
  try {
    payload = std::make_shared<const Bytes>(origin_.fetch(key));
    ok = true;
  } catch (const DanError& e) {
    if (e.kind() == Err::PoolTimeout) monitor_.inc_counter("pool.timeouts");
    err = map_origin_err(e.kind());
    err_detail = e.what();
  } catch (const std::exception& e) {
    err = Err::Internal;
    err_detail = e.what();
  }

  if (ok) {
    cache_.store_through(key, payload);  // L2 write failures are not fatal here
  }

  {
    std::lock_guard lk(mu_);
    inflight_.erase(key_string);
  }
  int waiters = 0;
  {
    std::lock_guard flk(flight->mu);
    flight->done = true;
    flight->failed = !ok;
    flight->payload = payload;
    flight->source = origin_.source();
    flight->err = err;
    flight->err_detail = err_detail;
    waiters = flight->waiters;
  }
  flight->cv.notify_all();

  if (ok) {
    monitor_.emit(Severity::Info, "broker", "cache.stored",
                  {{"k", key_string},
                   {"bytes", std::to_string(payload->size())},
                   {"waiters", std::to_string(waiters)}});
  }

  if (!ok) {
    monitor_.inc_counter(origin_.source() == Source::Backend ? "backend.errors"
                                                             : "upstream.errors");
    fail_request(key, err, err_detail, true);
  }
  monitor_.record_outcome(key.table,
                          origin_.source() == Source::Backend ? Outcome::BackendQuery
                                                              : Outcome::UpstreamQuery,
                          payload->size());
  return FetchOutcome{payload, origin_.source(), false, ms_since(t0)};
}

FetchOutcome Broker::follow(const CalibKey& key, const std::shared_ptr<Flight>& flight,
                            Clock::time_point t0) {
  std::unique_lock flk(flight->mu);
  const auto deadline = flight->start + std::chrono::milliseconds(fetch_timeout_ms_);
  if (!flight->cv.wait_until(flk, deadline, [&] { return flight->done; })) {
    flk.unlock();
    fail_request(key, Err::Timeout, "coalesced fetch exceeded fetch_timeout_ms", false);
  }
  if (flight->failed) {
    const Err err = flight->err;
    const std::string detail = flight->err_detail;
    flk.unlock();
    fail_request(key, err, detail, false);  // leader already emitted the event
  }
  FetchOutcome out{flight->payload, flight->source, true, 0};
  flk.unlock();
  monitor_.record_outcome(key.table, Outcome::Coalesced, out.payload->size());
  out.latency_ms = ms_since(t0);
  return out;
}

void Broker::fail_request(const CalibKey& key, Err err, const std::string& detail,
                          bool emit_event) {
  monitor_.record_outcome(key.table, Outcome::Error, 0);
  if (emit_event) {
    monitor_.emit(Severity::Error, "broker", "fetch.failed",
                  {{"k", cache_key_string(key)},
                   {"error", err_name(err)},
                   {"detail", detail}});
  }
  throw DanError(err, detail);
}

}  // namespace dan
