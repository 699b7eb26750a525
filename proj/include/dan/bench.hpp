// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dan/object.hpp"

#include <json.hpp>

namespace dan {

struct BenchOptions {
  std::string addr;
  uint32_t clients = 1;
  uint32_t requests_per_client = 1;
  std::vector<CalibKey> keys;  // each client walks these round-robin
  int timeout_ms = 30000;
};

struct BenchReport {
  uint32_t clients = 0;
  uint32_t requests_per_client = 0;
  uint64_t successes = 0;
  uint64_t failures = 0;
  uint64_t bytes_received = 0;
  double elapsed_ms = 0;
  double p50_ms = 0;
  double p95_ms = 0;
  double max_ms = 0;
  double throughput_bytes_per_s = 0;
  bool payloads_identical = true;  // per key, across all responses
  nlohmann::json counter_deltas;   // server-side, from STATS before/after
  nlohmann::json stats_after;
};

// Opens `clients` concurrent connections, each issuing requests_per_client
// GETs; collects client-side latencies and the server's counter deltas.
// Connection setup failures count as failures for that client's whole quota.
BenchReport run_bench(const BenchOptions& opt);

nlohmann::json bench_report_to_json(const BenchReport& r);
std::string bench_report_table(const BenchReport& r);

double percentile(std::vector<double> sorted_or_not, double q);  // nearest-rank

}  // namespace dan
