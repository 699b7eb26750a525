// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <latch>
#include <map>
#include <mutex>
#include <thread>

#include "dan/client.hpp"
#include "dan/errors.hpp"

namespace dan {

using nlohmann::json;

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const size_t rank = static_cast<size_t>(std::ceil(q * values.size()));
  return values[std::min(values.size() - 1, rank == 0 ? 0 : rank - 1)];
}

namespace {

const char* kDeltaCounters[] = {"requests_total",   "l1_hits",        "l2_hits",
                                "backend_queries",  "upstream_queries", "coalesced_requests",
                                "errors_total",     "bytes_served"};

json counter_deltas(const json& before, const json& after) {
  json out;
  for (const char* name : kDeltaCounters) {
    const uint64_t b = before.contains("counters") ? before["counters"].value(name, uint64_t{0})
                                                   : uint64_t{0};
    const uint64_t a = after.contains("counters") ? after["counters"].value(name, uint64_t{0})
                                                  : uint64_t{0};
    out[name] = a - b;
  }
  return out;
}

}  // namespace

BenchReport run_bench(const BenchOptions& opt) {
  BenchReport report;
  report.clients = opt.clients;
  report.requests_per_client = opt.requests_per_client;
  if (opt.keys.empty() && opt.requests_per_client > 0) {
    throw DanError(Err::Malformed, "bench needs at least one key");
  }

  Client stats_client(opt.addr, opt.timeout_ms);
  const json before = stats_client.stats();

  std::mutex agg_mu;
  std::vector<double> latencies;
  std::map<std::string, Bytes> first_payload;  // key_string -> first bytes seen
  bool payloads_identical = true;
  uint64_t successes = 0, failures = 0, bytes_received = 0;

  const auto t0 = std::chrono::steady_clock::now();
  if (opt.requests_per_client > 0) {
    std::latch ready(opt.clients);
    std::vector<std::thread> workers;
    workers.reserve(opt.clients);
    for (uint32_t w = 0; w < opt.clients; ++w) {
      workers.emplace_back([&, w] {
        std::vector<double> local_lat;
        uint64_t ok = 0, bad = 0, bytes = 0;
        std::unique_ptr<Client> client;
        try {
          client = std::make_unique<Client>(opt.addr, opt.timeout_ms);
        } catch (const std::exception&) {
          ready.arrive_and_wait();
          std::lock_guard lk(agg_mu);
          failures += opt.requests_per_client;
          return;
        }
        ready.arrive_and_wait();  // all clients fire together
        for (uint32_t i = 0; i < opt.requests_per_client; ++i) {
          const CalibKey& key = opt.keys[(w + i) % opt.keys.size()];
          const auto r0 = std::chrono::steady_clock::now();
          try {
            auto result = client->get(key);
            local_lat.push_back(
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - r0)
                    .count());
            ++ok;
            bytes += result.payload.size();
            std::lock_guard lk(agg_mu);
            auto it = first_payload.find(cache_key_string(key));
            if (it == first_payload.end()) {
              first_payload.emplace(cache_key_string(key), std::move(result.payload));
            } else if (it->second != result.payload) {
              payloads_identical = false;
            }
          } catch (const std::exception&) {
            ++bad;
          }
        }
        std::lock_guard lk(agg_mu);
        successes += ok;
        failures += bad;
        bytes_received += bytes;
        latencies.insert(latencies.end(), local_lat.begin(), local_lat.end());
      });
    }
    for (auto& t : workers) t.join();
  }
  report.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const json after = stats_client.stats();
  report.successes = successes;
  report.failures = failures;
  report.bytes_received = bytes_received;
  report.p50_ms = percentile(latencies, 0.50);
  report.p95_ms = percentile(latencies, 0.95);
  report.max_ms = latencies.empty() ? 0 : *std::max_element(latencies.begin(), latencies.end());
  report.throughput_bytes_per_s =
      report.elapsed_ms > 0 ? bytes_received / (report.elapsed_ms / 1000.0) : 0;
  report.payloads_identical = payloads_identical;
  report.counter_deltas = counter_deltas(before, after);
  report.stats_after = after;
  return report;
}

json bench_report_to_json(const BenchReport& r) {
  return json{{"clients", r.clients},
              {"requests_per_client", r.requests_per_client},
              {"successes", r.successes},
              {"failures", r.failures},
              {"bytes_received", r.bytes_received},
              {"elapsed_ms", r.elapsed_ms},
              {"latency_ms", {{"p50", r.p50_ms}, {"p95", r.p95_ms}, {"max", r.max_ms}}},
              {"throughput_bytes_per_s", r.throughput_bytes_per_s},
              {"payloads_identical", r.payloads_identical},
              {"counter_deltas", r.counter_deltas}};
}

std::string bench_report_table(const BenchReport& r) {
  char buf[512];
  std::string out;
  snprintf(buf, sizeof(buf), "%-24s %u x %u\n", "clients x requests", r.clients,
           r.requests_per_client);
  out += buf;
  snprintf(buf, sizeof(buf), "%-24s %llu ok, %llu failed\n", "requests",
           static_cast<unsigned long long>(r.successes),
           static_cast<unsigned long long>(r.failures));
  out += buf;
  snprintf(buf, sizeof(buf), "%-24s %.1f ms\n", "elapsed", r.elapsed_ms);
  out += buf;
  snprintf(buf, sizeof(buf), "%-24s p50 %.2f  p95 %.2f  max %.2f ms\n", "latency", r.p50_ms,
           r.p95_ms, r.max_ms);
  out += buf;
  snprintf(buf, sizeof(buf), "%-24s %.0f bytes/s\n", "throughput", r.throughput_bytes_per_s);
  out += buf;
  snprintf(buf, sizeof(buf), "%-24s %s\n", "payloads identical",
           r.payloads_identical ? "yes" : "NO");
  out += buf;
  out += "counter deltas          " + r.counter_deltas.dump() + "\n";
  return out;
}

}  // namespace dan
