// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/pool.hpp"

#include <algorithm>
#include <chrono>

namespace dan {

SessionPool::SessionPool(PoolConfig cfg)
    : max_(cfg.max_connections), acquire_timeout_ms_(cfg.acquire_timeout_ms) {
  if (max_ < 1) throw DanError(Err::Malformed, "max_connections must be >= 1");
  if (acquire_timeout_ms_ < 1) throw DanError(Err::Malformed, "acquire_timeout_ms must be >= 1");
}

SessionPool::Lease::~Lease() {
  if (pool_) pool_->release();
}

SessionPool::Lease SessionPool::acquire() {
  std::unique_lock lk(mu_);
  const uint64_t ticket = next_ticket_++;
  queue_.push_back(ticket);
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(acquire_timeout_ms_);
  auto admitted = [&] { return queue_.front() == ticket && in_use_ < max_; };
  while (!admitted()) {
    if (cv_.wait_until(lk, deadline) == std::cv_status::timeout) {
      if (admitted()) break;
      queue_.erase(std::find(queue_.begin(), queue_.end(), ticket));
      ++timeouts_;
      cv_.notify_all();  // a later ticket may now be at the front
      throw DanError(Err::PoolTimeout,
                     "no session slot within " + std::to_string(acquire_timeout_ms_) + " ms");
    }
  }
  queue_.pop_front();
  ++in_use_;
  ++total_acquired_;
  peak_in_use_ = std::max(peak_in_use_, in_use_);
  cv_.notify_all();
  return Lease(this);
}

void SessionPool::release() {
  std::lock_guard lk(mu_);
  --in_use_;
  cv_.notify_all();
}

void SessionPool::set_max_connections(uint32_t m) {
  std::lock_guard lk(mu_);
  max_ = m;
  cv_.notify_all();
}

SessionPool::State SessionPool::state() const {
  std::lock_guard lk(mu_);
  State s;
  s.max_connections = max_;
  s.in_use = in_use_;
  s.waiters = static_cast<uint32_t>(queue_.size());
  s.peak_in_use = peak_in_use_;
  s.total_acquired = total_acquired_;
  s.timeouts = timeouts_;
  return s;
}

}  // namespace dan
