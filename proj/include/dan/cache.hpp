// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dan/object.hpp"

namespace dan {

class Monitor;

// Byte-budgeted in-memory LRU over canonical payloads. WORM: re-inserting a
// present key only refreshes recency; a differing payload throws.
class L1Cache {
 public:
  explicit L1Cache(uint64_t budget_bytes);

  // false = rejected (payload larger than the whole budget; cache unchanged).
  bool insert(const CalibKey& key, PayloadPtr payload);
  PayloadPtr lookup(const CalibKey& key);  // nullptr = MISS

  // Shrinking evicts LRU entries down to the new budget immediately.
  void set_budget(uint64_t budget_bytes);

  uint64_t budget() const;
  uint64_t bytes() const;
  size_t entries() const;
  uint64_t hits() const { return hits_.load(); }
  uint64_t misses() const { return misses_.load(); }
  uint64_t evictions() const { return evictions_.load(); }

  bool contains(const CalibKey& key) const;          // no recency touch
  std::vector<std::string> keys_by_recency() const;  // MRU first

 private:
  struct Entry {
    std::string key_string;
    PayloadPtr payload;
  };

  void evict_to_fit_locked(uint64_t incoming);

  mutable std::mutex mu_;
  uint64_t budget_;
  uint64_t bytes_ = 0;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<std::string, std::list<Entry>::iterator> map_;
  std::atomic<uint64_t> hits_{0};
  std::atomic<uint64_t> misses_{0};
  std::atomic<uint64_t> evictions_{0};
};

// Persistent disk tier. Files are named by the flattened key string
// ('/' -> "__", plus a "~N" suffix on the rare filename collision); the
// index file dir/index.json holds the authoritative key strings, sizes,
// CRCs and recency. Missing or corrupt index: rebuilt by scanning *.obj.
class L2Cache {
 public:
  struct Options {
    std::filesystem::path dir;
    uint64_t budget_bytes = 0;
  };

  L2Cache(Options opt, Monitor* monitor = nullptr);

  // Atomic write (temp + rename) plus index update. Present key = no-op
  // (WORM); concurrent stores of one key collapse to one write. Throws Io.
  void store(const CalibKey& key, const Bytes& payload);
  void store(const CalibKey& key, const PayloadPtr& payload) { store(key, *payload); }

  // nullptr = MISS. A CRC mismatch or unreadable file self-heals: the entry
  // is dropped, corrupt_drops increments, an ERROR event is emitted.
  PayloadPtr load(const CalibKey& key);

  uint64_t bytes() const;
  size_t entries() const;
  uint64_t budget() const { return budget_; }
  uint64_t hits() const { return hits_.load(); }
  uint64_t evictions() const { return evictions_.load(); }
  uint64_t corrupt_drops() const { return corrupt_drops_.load(); }

  bool contains(const CalibKey& key) const;
  std::vector<std::string> indexed_keys() const;  // sorted

  static std::string flatten_key_string(const std::string& key_string);

 private:
  struct Entry {
    std::string file;
    uint64_t size = 0;
    uint32_t crc32 = 0;
    uint64_t last_access = 0;
  };

  void load_or_rebuild_index();
  void write_index();  // serializes under mu_, writes under index_io_mu_
  std::string pick_filename_locked(const std::string& key_string) const;
  std::vector<std::string> evict_to_fit_locked(uint64_t incoming);
  void drop_entry(const std::string& key_string, const std::string& file, const char* reason);

  std::filesystem::path dir_;
  uint64_t budget_;
  Monitor* monitor_;

  mutable std::mutex mu_;
  std::map<std::string, Entry> index_;  // key_string -> entry
  std::set<std::string> storing_;       // key_strings with a write in flight
  std::set<std::string> files_in_flight_;
  uint64_t bytes_ = 0;
  uint64_t seq_ = 0;
  uint64_t tmp_seq_ = 0;

  std::mutex index_io_mu_;

  std::atomic<uint64_t> hits_{0};
  std::atomic<uint64_t> evictions_{0};
  std::atomic<uint64_t> corrupt_drops_{0};
};

enum class CacheTier { L1, L2 };

// L1 over L2 with promotion on L2 hits.
class TieredCache {
 public:
  TieredCache(uint64_t l1_budget_bytes, L2Cache::Options l2, Monitor* monitor = nullptr);

  struct Hit {
    PayloadPtr payload;
    CacheTier tier;
  };

  std::optional<Hit> lookup(const CalibKey& key);

  // L2 first (durability), then L1. An L2 write failure is demoted to an
  // ERROR event; the payload still reaches L1 and the caller.
  void store_through(const CalibKey& key, const PayloadPtr& payload);

  L1Cache& l1() { return l1_; }
  L2Cache& l2() { return l2_; }
  const L1Cache& l1() const { return l1_; }
  const L2Cache& l2() const { return l2_; }
  uint64_t tier_misses() const { return misses_.load(); }

 private:
  L1Cache l1_;
  L2Cache l2_;
  Monitor* monitor_;
  std::atomic<uint64_t> misses_{0};
};

}  // namespace dan
