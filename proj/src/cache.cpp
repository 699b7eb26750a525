// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/cache.hpp"

#include <algorithm>
#include <fstream>

#include "dan/crc32.hpp"
#include "dan/errors.hpp"
#include "dan/monitor.hpp"

#include <json.hpp>

namespace dan {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// L1

L1Cache::L1Cache(uint64_t budget_bytes) : budget_(budget_bytes) {
  if (budget_ < 1) throw DanError(Err::Malformed, "L1 budget_bytes must be >= 1");
}

bool L1Cache::insert(const CalibKey& key, PayloadPtr payload) {
  const std::string ks = cache_key_string(key);
  const uint64_t size = payload->size();
  std::lock_guard lk(mu_);
  auto it = map_.find(ks);
  if (it != map_.end()) {
    if (*it->second->payload != *payload) {
      throw DanError(Err::WormViolation, "differing payload re-inserted for " + ks);
    }
    lru_.splice(lru_.begin(), lru_, it->second);  // refresh recency only
    return true;
  }
  if (size > budget_) return false;
  evict_to_fit_locked(size);
  lru_.push_front(Entry{ks, std::move(payload)});
  map_[ks] = lru_.begin();
  bytes_ += size;
  return true;
}

PayloadPtr L1Cache::lookup(const CalibKey& key) {
  const std::string ks = cache_key_string(key);
  std::lock_guard lk(mu_);
  auto it = map_.find(ks);
  if (it == map_.end()) {
    misses_.fetch_add(1);
    return nullptr;
  }
  lru_.splice(lru_.begin(), lru_, it->second);
  hits_.fetch_add(1);
  return it->second->payload;
}

void L1Cache::evict_to_fit_locked(uint64_t incoming) {
  while (!lru_.empty() && bytes_ + incoming > budget_) {
    const Entry& victim = lru_.back();
    bytes_ -= victim.payload->size();
    map_.erase(victim.key_string);
    lru_.pop_back();
    evictions_.fetch_add(1);
  }
}

void L1Cache::set_budget(uint64_t budget_bytes) {
  std::lock_guard lk(mu_);
  budget_ = budget_bytes;
  evict_to_fit_locked(0);
}

uint64_t L1Cache::budget() const {
  std::lock_guard lk(mu_);
  return budget_;
}

uint64_t L1Cache::bytes() const {
  std::lock_guard lk(mu_);
  return bytes_;
}

size_t L1Cache::entries() const {
  std::lock_guard lk(mu_);
  return map_.size();
}

bool L1Cache::contains(const CalibKey& key) const {
  std::lock_guard lk(mu_);
  return map_.find(cache_key_string(key)) != map_.end();
}

std::vector<std::string> L1Cache::keys_by_recency() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  out.reserve(lru_.size());
  for (const auto& e : lru_) out.push_back(e.key_string);
  return out;
}

// ---------------------------------------------------------------------------
// L2

namespace {

Bytes read_all(const fs::path& p, bool& ok) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    ok = false;
    return {};
  }
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ok = !in.bad();
  return data;
}

void write_file_atomic(const fs::path& final_path, const fs::path& tmp_path,
                       std::span<const uint8_t> data) {
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DanError(Err::Io, "cannot create " + tmp_path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw DanError(Err::Io, "write failed for " + tmp_path.string());
  }
  std::error_code ec;
  fs::rename(tmp_path, final_path, ec);
  if (ec) {
    fs::remove(tmp_path, ec);
    throw DanError(Err::Io, "rename failed for " + final_path.string());
  }
}

}  // namespace

std::string L2Cache::flatten_key_string(const std::string& key_string) {
  std::string out;
  out.reserve(key_string.size() + 2);
  for (char c : key_string) {
    if (c == '/') {
      out += "__";
    } else {
      out += c;
    }
  }
  return out;
}

L2Cache::L2Cache(Options opt, Monitor* monitor)
    : dir_(std::move(opt.dir)), budget_(opt.budget_bytes), monitor_(monitor) {
  if (budget_ < 1) throw DanError(Err::Malformed, "L2 budget_bytes must be >= 1");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw DanError(Err::Io, "cannot create L2 dir " + dir_.string());
  }
  load_or_rebuild_index();
}

void L2Cache::load_or_rebuild_index() {
  bool ok = false;
  bool parsed = false;
  {
    std::lock_guard lk(mu_);
    const auto index_path = dir_ / "index.json";
    if (fs::exists(index_path)) {
      Bytes raw = read_all(index_path, ok);
      if (ok) {
        auto doc = json::parse(raw.begin(), raw.end(), nullptr, false);
        if (!doc.is_discarded() && doc.is_object() && doc.contains("entries") &&
            doc["entries"].is_array()) {
          parsed = true;
          seq_ = doc.value("seq", uint64_t{0});
          for (const auto& e : doc["entries"]) {
            if (!e.is_object() || !e.contains("key_string") || !e.contains("file")) {
              parsed = false;
              break;
            }
            Entry ent;
            ent.file = e["file"].get<std::string>();
            ent.size = e.value("size", uint64_t{0});
            ent.crc32 = e.value("crc32", uint32_t{0});
            ent.last_access = e.value("last_access", uint64_t{0});
            if (!fs::exists(dir_ / ent.file)) continue;  // vanished on disk
            index_[e["key_string"].get<std::string>()] = ent;
            bytes_ += ent.size;
            seq_ = std::max(seq_, ent.last_access);
          }
          if (!parsed) {
            index_.clear();
            bytes_ = 0;
            seq_ = 0;
          }
        }
      }
    }
    if (!parsed) {
      // Rebuild from the .obj files themselves; the decoded key is
      // authoritative, recency resets to file order.
      index_.clear();
      bytes_ = 0;
      seq_ = 0;
      std::vector<fs::path> files;
      for (const auto& de : fs::directory_iterator(dir_)) {
        if (de.is_regular_file() && de.path().extension() == ".obj") {
          files.push_back(de.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        bool rok = false;
        Bytes data = read_all(f, rok);
        std::string ks;
        if (rok) {
          try {
            auto [key, rows] = decode_object(data);
            (void)rows;
            ks = cache_key_string(key);
          } catch (const DanError&) {
            rok = false;
          }
        }
        if (!rok || index_.count(ks)) {
          std::error_code ec;
          fs::remove(f, ec);
          corrupt_drops_.fetch_add(1);
          continue;
        }
        Entry ent;
        ent.file = f.filename().string();
        ent.size = data.size();
        ent.crc32 = crc32(std::span<const uint8_t>(data.data(), data.size()));
        ent.last_access = ++seq_;
        bytes_ += ent.size;
        index_[ks] = ent;
      }
    }
  }
  // Enforce the budget over whatever was recovered.
  std::vector<std::string> victims;
  {
    std::lock_guard lk(mu_);
    victims = evict_to_fit_locked(0);
  }
  for (const auto& f : victims) {
    std::error_code ec;
    fs::remove(dir_ / f, ec);
  }
  write_index();
}

std::string L2Cache::pick_filename_locked(const std::string& key_string) const {
  const std::string base = flatten_key_string(key_string);
  auto taken = [&](const std::string& name) {
    if (files_in_flight_.count(name)) return true;
    for (const auto& [ks, e] : index_) {
      if (e.file == name) return true;
    }
    return false;
  };
  std::string candidate = base + ".obj";
  for (uint64_t n = 1; taken(candidate); ++n) {
    candidate = base + "~" + std::to_string(n) + ".obj";
  }
  return candidate;
}

void L2Cache::store(const CalibKey& key, const Bytes& payload) {
  const std::string ks = cache_key_string(key);
  std::string file;
  fs::path tmp;
  {
    std::lock_guard lk(mu_);
    if (index_.count(ks) || storing_.count(ks)) return;  // WORM no-op
    if (payload.size() > budget_) return;                // cannot ever fit
    file = pick_filename_locked(ks);
    storing_.insert(ks);
    files_in_flight_.insert(file);
    tmp = dir_ / (".tmp-" + std::to_string(++tmp_seq_));
  }

  try {
    write_file_atomic(dir_ / file, tmp, std::span<const uint8_t>(payload.data(), payload.size()));
  } catch (...) {
    std::lock_guard lk(mu_);
    storing_.erase(ks);
    files_in_flight_.erase(file);
    throw;
  }

  std::vector<std::string> victims;
  {
    std::lock_guard lk(mu_);
    storing_.erase(ks);
    files_in_flight_.erase(file);
    victims = evict_to_fit_locked(payload.size());
    Entry ent;
    ent.file = file;
    ent.size = payload.size();
    ent.crc32 = crc32(std::span<const uint8_t>(payload.data(), payload.size()));
    ent.last_access = ++seq_;
    index_[ks] = ent;
    bytes_ += ent.size;
  }
  for (const auto& f : victims) {
    std::error_code ec;
    fs::remove(dir_ / f, ec);
  }
  write_index();
}

std::vector<std::string> L2Cache::evict_to_fit_locked(uint64_t incoming) {
  std::vector<std::string> victim_files;
  while (!index_.empty() && bytes_ + incoming > budget_) {
    auto victim = index_.begin();
    for (auto it = index_.begin(); it != index_.end(); ++it) {
      if (it->second.last_access < victim->second.last_access) victim = it;
    }
    bytes_ -= victim->second.size;
    victim_files.push_back(victim->second.file);
    index_.erase(victim);
    evictions_.fetch_add(1);
  }
  return victim_files;
}

PayloadPtr L2Cache::load(const CalibKey& key) {
  const std::string ks = cache_key_string(key);
  Entry snap;
  {
    std::lock_guard lk(mu_);
    auto it = index_.find(ks);
    if (it == index_.end()) return nullptr;
    snap = it->second;
  }

  bool ok = false;
  Bytes data = read_all(dir_ / snap.file, ok);
  if (ok && data.size() == snap.size &&
      crc32(std::span<const uint8_t>(data.data(), data.size())) == snap.crc32) {
    {
      std::lock_guard lk(mu_);
      auto it = index_.find(ks);
      if (it != index_.end() && it->second.file == snap.file) {
        it->second.last_access = ++seq_;
      }
    }
    hits_.fetch_add(1);
    write_index();
    return std::make_shared<const Bytes>(std::move(data));
  }

  drop_entry(ks, snap.file, ok ? "crc mismatch" : "unreadable file");
  return nullptr;
}

void L2Cache::drop_entry(const std::string& key_string, const std::string& file,
                         const char* reason) {
  bool dropped = false;
  {
    std::lock_guard lk(mu_);
    auto it = index_.find(key_string);
    if (it != index_.end() && it->second.file == file) {
      bytes_ -= it->second.size;
      index_.erase(it);
      dropped = true;
    }
  }
  if (!dropped) return;  // lost a race with eviction; nothing to heal
  std::error_code ec;
  fs::remove(dir_ / file, ec);
  corrupt_drops_.fetch_add(1);
  write_index();
  if (monitor_) {
    monitor_->emit(Severity::Error, "cache", "cache.corrupt_dropped",
                   {{"k", key_string}, {"reason", reason}});
  }
}

void L2Cache::write_index() {
  std::lock_guard io(index_io_mu_);
  json doc;
  {
    std::lock_guard lk(mu_);
    doc["seq"] = seq_;
    auto entries = json::array();
    for (const auto& [ks, e] : index_) {
      entries.push_back({{"key_string", ks},
                         {"file", e.file},
                         {"size", e.size},
                         {"crc32", e.crc32},
                         {"last_access", e.last_access}});
    }
    doc["entries"] = std::move(entries);
  }
  const std::string text = doc.dump();
  try {
    write_file_atomic(dir_ / "index.json", dir_ / ".index.tmp",
                      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()),
                                               text.size()));
  } catch (const DanError&) {
    if (monitor_) {
      monitor_->emit(Severity::Error, "cache", "cache.index_write_failed",
                     {{"dir", dir_.string()}});
    }
  }
}

uint64_t L2Cache::bytes() const {
  std::lock_guard lk(mu_);
  return bytes_;
}

size_t L2Cache::entries() const {
  std::lock_guard lk(mu_);
  return index_.size();
}

bool L2Cache::contains(const CalibKey& key) const {
  std::lock_guard lk(mu_);
  return index_.find(cache_key_string(key)) != index_.end();
}

std::vector<std::string> L2Cache::indexed_keys() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  out.reserve(index_.size());
  for (const auto& [ks, e] : index_) out.push_back(ks);
  return out;
}

// ---------------------------------------------------------------------------
// TieredCache

TieredCache::TieredCache(uint64_t l1_budget_bytes, L2Cache::Options l2, Monitor* monitor)
    : l1_(l1_budget_bytes), l2_(std::move(l2), monitor), monitor_(monitor) {}

std::optional<TieredCache::Hit> TieredCache::lookup(const CalibKey& key) {
  if (auto p = l1_.lookup(key)) {
    return Hit{std::move(p), CacheTier::L1};
  }
  if (auto p = l2_.load(key)) {
    l1_.insert(key, p);  // promote; oversize payloads simply stay L2-only
    return Hit{std::move(p), CacheTier::L2};
  }
  misses_.fetch_add(1);
  return std::nullopt;
}

void TieredCache::store_through(const CalibKey& key, const PayloadPtr& payload) {
  try {
    l2_.store(key, payload);
  } catch (const DanError& e) {
    if (monitor_) {
      monitor_->emit(Severity::Error, "cache", "cache.store_failed",
                     {{"k", cache_key_string(key)}, {"error", e.what()}});
    }
  }
  l1_.insert(key, payload);
}

}  // namespace dan
