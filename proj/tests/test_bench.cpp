// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/bench.hpp"

#include "dan/backend.hpp"
#include "dan/server.hpp"
#include "test_util.hpp"
#include "topology_util.hpp"

#include <doctest.h>

using namespace dan;
using dantest::TempDir;

namespace {

struct BenchRig {
  TempDir dir;
  std::unique_ptr<Server> server;

  explicit BenchRig(uint32_t latency_ms) {
    for (uint64_t r = 1; r <= 4; ++r) {
      gen_dataset(dir / "data", "smt_ped", r, "v1", 200, r);
    }
    server = std::make_unique<Server>(
        dantest::make_direct_config(dir / "data", dir.path(), latency_ms));
    server->start();
  }
};

}  // namespace

TEST_CASE("bench accounting: clients x requests equals successes plus failures") {
  BenchRig rig(0);
  BenchOptions opt;
  opt.addr = rig.server->bound_addr();
  opt.clients = 6;
  opt.requests_per_client = 7;
  opt.keys = {{"smt_ped", 1, "v1"}, {"smt_ped", 2, "v1"}, {"smt_ped", 404, "v1"}};
  const auto report = run_bench(opt);
  CHECK(report.successes + report.failures ==
        static_cast<uint64_t>(opt.clients) * opt.requests_per_client);
  CHECK(report.failures > 0);  // run 404 never exists
  CHECK(report.payloads_identical);
}

TEST_CASE("bench with zero requests yields an empty report") {
  BenchRig rig(0);
  BenchOptions opt;
  opt.addr = rig.server->bound_addr();
  opt.clients = 1;
  opt.requests_per_client = 0;
  const auto report = run_bench(opt);
  CHECK(report.successes == 0);
  CHECK(report.failures == 0);
  CHECK(report.p50_ms == 0);
  CHECK(report.counter_deltas["requests_total"] == 0);
}

TEST_CASE("warm rerun beats the cold run when the backend is slow") {
  BenchRig rig(100);
  BenchOptions opt;
  opt.addr = rig.server->bound_addr();
  opt.clients = 4;
  opt.requests_per_client = 2;
  opt.keys = {{"smt_ped", 1, "v1"}, {"smt_ped", 2, "v1"}};

  const auto cold = run_bench(opt);
  CHECK(cold.counter_deltas["backend_queries"] == 2);

  const auto warm = run_bench(opt);
  CHECK(warm.counter_deltas["backend_queries"] == 0);
  CHECK(warm.p50_ms < cold.p50_ms);
  CHECK(warm.counter_deltas["l1_hits"] == 8);
}

TEST_CASE("bench report serializes to JSON and a table") {
  BenchRig rig(0);
  BenchOptions opt;
  opt.addr = rig.server->bound_addr();
  opt.clients = 2;
  opt.requests_per_client = 3;
  opt.keys = {{"smt_ped", 3, "v1"}};
  const auto report = run_bench(opt);
  const auto doc = bench_report_to_json(report);
  CHECK(doc["clients"] == 2);
  CHECK(doc["latency_ms"].contains("p95"));
  const std::string table = bench_report_table(report);
  CHECK(table.find("latency") != std::string::npos);
  CHECK(table.find("payloads identical") != std::string::npos);
}

TEST_CASE("invariants hold while configuration changes under load") {
  BenchRig rig(5);
  const std::string addr = rig.server->bound_addr();

  std::atomic<bool> done{false};
  std::thread reconfigurer([&] {
    Client admin(addr);
    uint64_t budgets[] = {5000, 200000, 64ull << 20};
    uint64_t inflight[] = {4, 64, 1024};
    int i = 0;
    while (!done.load()) {
      admin.set_config("l1_budget_bytes", budgets[i % 3]);
      admin.set_config("broker.max_inflight_keys", inflight[i % 3]);
      admin.set_config("pool.max_connections", 1 + i % 4);
      ++i;
      std::this_thread::sleep_for(std::chrono::milliseconds(3));
    }
  });

  std::atomic<int> failures{0};
  std::vector<std::thread> workers;
  std::mutex expected_mu;
  std::array<Bytes, 4> expected;
  for (int w = 0; w < 8; ++w) {
    workers.emplace_back([&, w] {
      try {
        Client c(addr, 10000);
        for (int i = 0; i < 40; ++i) {
          const uint64_t run = 1 + (w + i) % 4;
          auto res = c.get({"smt_ped", run, "v1"});
          std::lock_guard lk(expected_mu);
          Bytes& want = expected[run - 1];
          if (want.empty()) {
            want = res.payload;
          } else if (want != res.payload) {
            failures.fetch_add(1);  // WORM must hold through reconfigs
          }
        }
      } catch (const std::exception&) {
        failures.fetch_add(1);
      }
    });
  }
  for (auto& t : workers) t.join();
  done.store(true);
  reconfigurer.join();

  CHECK(failures.load() == 0);
  Client client(addr);
  const auto stats = client.stats();
  const auto& c = stats["counters"];
  CHECK(c["requests_total"].get<uint64_t>() ==
        c["l1_hits"].get<uint64_t>() + c["l2_hits"].get<uint64_t>() +
            c["backend_queries"].get<uint64_t>() + c["upstream_queries"].get<uint64_t>() +
            c["coalesced_requests"].get<uint64_t>() + c["errors_total"].get<uint64_t>());
  CHECK(stats["gauges"]["l1_bytes"].get<uint64_t>() <=
        stats["config"]["l1_budget_bytes"].get<uint64_t>());
  CHECK(stats["pool"]["in_use"] == 0);
}
