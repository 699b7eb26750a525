// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>

#include "dan/object.hpp"

namespace dan {

// File-backed stand-in for the central database. One run set per file,
// canonical object encoding throughout; this is the seam where a real
// database driver would plug in.
struct DataSourceSpec {
  std::filesystem::path root_dir;
  uint32_t simulated_latency_ms = 0;
  bool fail_switch = false;  // when set, every query fails (outage simulation)
};

// <root>/<esc(table)>/<run>.<esc(variant)>.rows
std::filesystem::path dataset_path(const std::filesystem::path& root, const CalibKey& key);

// Synthesizes a run set with columns (channel_id INT, pedestal FLOAT,
// gain FLOAT); for row i:
//   channel_id = i
//   pedestal   = ((i * 2654435761 + seed) mod 1000000) / 1000.0
//   gain       = 1.0 + ((i * 40503 + seed) mod 1000) / 1000.0
// Deterministic for fixed arguments; returns the written file path.
std::filesystem::path gen_dataset(const std::filesystem::path& root, const std::string& table,
                                  uint64_t run, const std::string& variant, uint64_t n_rows,
                                  uint64_t seed);

// Row i of the generator, usable as an independent check.
Row gen_dataset_row(uint64_t i, uint64_t seed);

class FileBackend {
 public:
  explicit FileBackend(DataSourceSpec spec);

  // Sleeps simulated_latency_ms, then loads and decodes the run-set file.
  // Throws BackendUnavailable (fail_switch), NotFound (absent file) or
  // Corrupt (file fails object validation).
  RowSet query(const CalibKey& key);

  void set_fail_switch(bool on) { fail_.store(on); }
  bool fail_switch() const { return fail_.load(); }
  const DataSourceSpec& spec() const { return spec_; }

 private:
  DataSourceSpec spec_;
  std::atomic<bool> fail_;
};

}  // namespace dan
