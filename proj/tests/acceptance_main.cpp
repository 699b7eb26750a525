// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: scaled end-to-end experiments and property checks.
// Each criterion prints one [PASS]/[FAIL] line; the exit code is the number
// of failed criteria.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <latch>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "dan/backend.hpp"
#include "dan/bench.hpp"
#include "dan/broker.hpp"
#include "dan/cache.hpp"
#include "dan/client.hpp"
#include "dan/crc32.hpp"
#include "dan/monitor.hpp"
#include "dan/server.hpp"
#include "dan/wire.hpp"
#include "test_util.hpp"
#include "topology_util.hpp"

#include <json.hpp>

using namespace dan;
using dantest::TempDir;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }

  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool conservation_holds(const json& stats) {
  const auto& c = stats["counters"];
  const uint64_t sum = c["l1_hits"].get<uint64_t>() + c["l2_hits"].get<uint64_t>() +
                       c["backend_queries"].get<uint64_t>() +
                       c["upstream_queries"].get<uint64_t>() +
                       c["coalesced_requests"].get<uint64_t>() +
                       c["errors_total"].get<uint64_t>();
  return c["requests_total"].get<uint64_t>() == sum;
}

std::string hex(std::span<const uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (uint8_t b : data) {
    out += digits[b >> 4];
    out += digits[b & 0xF];
  }
  return out;
}

// conservation checked on every server a criterion touches
std::vector<bool> g_conservation_checks;

void record_conservation(const json& stats) {
  g_conservation_checks.push_back(conservation_holds(stats));
}

// ---------------------------------------------------------------------------
// 1. Coalescing: 50 clients, one cold key, 200 ms backend latency.

Check criterion_coalescing() {
  Check c;
  const auto t0 = Clock::now();
  TempDir dir;
  gen_dataset(dir / "data", "smt_ped", 1, "v1", 500, 7);
  auto cfg = dantest::make_direct_config(dir / "data", dir.path(), 200);
  Server server(cfg);
  server.start();

  BenchOptions opt;
  opt.addr = server.bound_addr();
  opt.clients = 50;
  opt.requests_per_client = 1;
  opt.keys = {{"smt_ped", 1, "v1"}};
  const BenchReport report = run_bench(opt);

  c.expect(report.successes == 50, "successes=" + std::to_string(report.successes));
  c.expect(report.counter_deltas["backend_queries"] == 1,
           "backend_queries delta " + report.counter_deltas["backend_queries"].dump());
  c.expect(report.counter_deltas["coalesced_requests"] == 49,
           "coalesced delta " + report.counter_deltas["coalesced_requests"].dump());
  c.expect(report.payloads_identical, "payloads differ");
  record_conservation(report.stats_after);
  c.expect(conservation_holds(report.stats_after), "conservation");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 5.0, "runtime " + std::to_string(elapsed) + "s");
  c.note("backend_queries +1, coalesced +49, " + std::to_string(elapsed).substr(0, 4) + "s");
  server.stop();
  return c;
}

// ---------------------------------------------------------------------------
// 2. Cached speedup: 400 ms simulated latency, ~1 MB object, warm p50 <= 1/4 cold p50.

Check criterion_cached_speedup() {
  Check c;
  const auto t0 = Clock::now();
  TempDir dir;
  const uint64_t rows = 41700;  // ~1 MB encoded
  for (uint64_t r = 1; r <= 3; ++r) gen_dataset(dir / "data", "smt_ped", r, "v1", rows, r);
  auto cfg = dantest::make_direct_config(dir / "data", dir.path(), 400);
  Server server(cfg);
  server.start();

  Client client(server.bound_addr(), 30000);
  std::vector<double> cold, warm;
  for (uint64_t r = 1; r <= 3; ++r) {
    const auto f0 = Clock::now();
    auto res = client.get({"smt_ped", r, "v1"});
    cold.push_back(seconds_since(f0) * 1000.0);
    c.expect(res.payload.size() > 900'000 && res.payload.size() < 1'100'000,
             "object size " + std::to_string(res.payload.size()));
  }
  for (int pass = 0; pass < 5; ++pass) {
    for (uint64_t r = 1; r <= 3; ++r) {
      const auto f0 = Clock::now();
      client.get({"smt_ped", r, "v1"});
      warm.push_back(seconds_since(f0) * 1000.0);
    }
  }
  const double cold_p50 = percentile(cold, 0.50);
  const double warm_p50 = percentile(warm, 0.50);
  c.expect(warm_p50 <= cold_p50 / 4.0,
           "warm p50 " + std::to_string(warm_p50) + " vs cold p50 " + std::to_string(cold_p50));
  record_conservation(client.stats());
  c.expect(conservation_holds(client.stats()), "conservation");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, "runtime " + std::to_string(elapsed) + "s");
  {
    std::ostringstream os;
    os.precision(3);
    os << "cold p50 " << cold_p50 << " ms, warm p50 " << warm_p50 << " ms ("
       << cold_p50 / std::max(warm_p50, 1e-9) << "x)";
    c.note(os.str());
  }
  server.stop();
  return c;
}

// ---------------------------------------------------------------------------
// 3. Scaled SMT fidelity: 800,000 rows in 19-31 MB, served end-to-end;
//    20 run sets at 1/20 scale fit a 25 MB L1 budget.

Check criterion_smt_fidelity() {
  Check c;
  const auto t0 = Clock::now();
  TempDir dir;
  const auto path = gen_dataset(dir / "data", "smt_ped", 800, "v1", 800'000, 42);
  const auto size = std::filesystem::file_size(path);
  c.expect(size >= 19'000'000 && size <= 31'000'000, "encoded size " + std::to_string(size));

  auto cfg = dantest::make_direct_config(dir / "data", dir.path(), 0);
  Server server(cfg);
  server.start();
  {
    Client client(server.bound_addr(), 60000);
    const auto res = client.get({"smt_ped", 800, "v1"});
    c.expect(res.payload.size() == size, "served size " + std::to_string(res.payload.size()));
    auto [key, rowset] = decode_object(res.payload);
    c.expect(rowset.rows.size() == 800'000, "rows " + std::to_string(rowset.rows.size()));
    record_conservation(client.stats());
    c.expect(conservation_holds(client.stats()), "conservation");
  }
  server.stop();

  // 20 objects at 1/20 scale in a 25 MB budget
  L1Cache l1(25'000'000);
  uint64_t total = 0;
  for (uint64_t r = 0; r < 20; ++r) {
    RowSet rows;
    rows.columns = {{"channel_id", CType::Int}, {"pedestal", CType::Float},
                    {"gain", CType::Float}};
    for (uint64_t i = 0; i < 40'000; ++i) rows.rows.push_back(gen_dataset_row(i, r));
    auto payload = std::make_shared<const Bytes>(encode_object({"smt_ped", r, "v"}, rows));
    total += payload->size();
    c.expect(l1.insert({"smt_ped", r, "v"}, payload), "oversize at run " + std::to_string(r));
  }
  c.expect(l1.entries() == 20, "entries " + std::to_string(l1.entries()));
  c.expect(l1.evictions() == 0, "evictions " + std::to_string(l1.evictions()));

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s");
  c.note(std::to_string(size) + " bytes at 800k rows; 20x" + std::to_string(total / 20) +
         " bytes cached in 25 MB, " + std::to_string(elapsed).substr(0, 4) + "s");
  return c;
}

// ---------------------------------------------------------------------------
// 4. Outage resilience: 2-level subprocess chain, root killed.

Check criterion_outage() {
  Check c;
  const auto t0 = Clock::now();
  TempDir dir;
  gen_dataset(dir / "backend", "smt_ped", 1, "v1", 200, 7);

  const uint32_t fetch_timeout_ms = 2000;
  std::filesystem::create_directories(dir / "root");
  std::filesystem::create_directories(dir / "leaf");
  auto root_cfg = dantest::make_direct_config(dir / "backend", dir / "root", 10);
  {
    std::ofstream out(dir / "root" / "config.json");
    out << config_to_json(root_cfg).dump();
  }
  dantest::ServerProcess root;
  root.start(dir / "root" / "config.json");

  auto leaf_cfg = dantest::make_proxy_config(root.addr(), dir / "leaf");
  leaf_cfg.broker.fetch_timeout_ms = fetch_timeout_ms;
  {
    std::ofstream out(dir / "leaf" / "config.json");
    out << config_to_json(leaf_cfg).dump();
  }
  dantest::ServerProcess leaf;
  leaf.start(dir / "leaf" / "config.json");

  Bytes cold_payload;
  {
    Client client(leaf.addr(), 10000);
    auto res = client.get({"smt_ped", 1, "v1"});
    c.expect(res.meta.source == "UPSTREAM", "cold source " + res.meta.source);
    cold_payload = std::move(res.payload);
  }

  root.kill_hard();

  {
    Client client(leaf.addr(), 10000);
    auto res = client.get({"smt_ped", 1, "v1"});
    c.expect(res.meta.source == "L1" || res.meta.source == "L2",
             "post-outage source " + res.meta.source);
    c.expect(res.payload == cold_payload, "payload changed across outage");

    const auto e0 = Clock::now();
    try {
      client.get({"smt_ped", 2, "v1"});
      c.expect(false, "uncached key unexpectedly succeeded");
    } catch (const DanError& e) {
      c.expect(e.kind() == Err::BackendUnavailable,
               std::string("error kind ") + err_name(e.kind()));
      c.expect(wire_code(e.kind()) == 2, "wire code");
    }
    const double err_ms = seconds_since(e0) * 1000.0;
    c.expect(err_ms <= fetch_timeout_ms, "error took " + std::to_string(err_ms) + " ms");

    record_conservation(client.stats());
    c.expect(conservation_holds(client.stats()), "conservation");
  }
  leaf.kill_hard();

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, "runtime " + std::to_string(elapsed) + "s");
  c.note("leaf served cached key after root kill, code 2 for uncached, " +
         std::to_string(elapsed).substr(0, 4) + "s");
  return c;
}

// ---------------------------------------------------------------------------
// 5. Pool throttle: 100 concurrent distinct-key misses, max_connections = 4.

Check criterion_pool_throttle() {
  Check c;
  const auto t0 = Clock::now();
  TempDir dir;
  for (uint64_t r = 0; r < 100; ++r) gen_dataset(dir / "data", "t", r, "v", 20, r);

  Monitor monitor;
  FileBackend backend({dir / "data", 20, false});
  SessionPool pool({4, 20000});
  DirectOrigin origin(backend, pool, nullptr);
  TieredCache cache(64 << 20, {dir / "l2", 256 << 20}, &monitor);
  Broker broker({1024, 30000}, cache, origin, monitor);

  std::atomic<bool> sampling{true};
  std::atomic<uint32_t> sampled_peak{0};
  std::atomic<int> violations{0};
  std::thread sampler([&] {
    while (sampling.load()) {
      const auto s = pool.state();
      if (s.in_use > 4) violations.fetch_add(1);
      uint32_t peak = sampled_peak.load();
      while (s.in_use > peak && !sampled_peak.compare_exchange_weak(peak, s.in_use)) {
      }
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  });

  std::latch ready(100);
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (uint64_t r = 0; r < 100; ++r) {
    threads.emplace_back([&, r] {
      ready.arrive_and_wait();
      try {
        broker.fetch({"t", r, "v"});
      } catch (const std::exception&) {
        failures.fetch_add(1);
      }
    });
  }
  for (auto& t : threads) t.join();
  sampling.store(false);
  sampler.join();

  const auto ps = pool.state();
  c.expect(failures.load() == 0, "failures " + std::to_string(failures.load()));
  c.expect(violations.load() == 0, "sampled in_use above 4");
  c.expect(ps.peak_in_use == 4, "peak_in_use " + std::to_string(ps.peak_in_use));
  c.expect(ps.in_use == 0, "sessions leaked");
  c.expect(ps.total_acquired == 100, "total_acquired " + std::to_string(ps.total_acquired));

  const auto s = monitor.identity_snapshot();
  const bool conserved = s.requests_total == s.l1_hits + s.l2_hits + s.backend_queries +
                                                 s.upstream_queries + s.coalesced_requests +
                                                 s.errors_total;
  g_conservation_checks.push_back(conserved);
  c.expect(conserved, "conservation");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, "runtime " + std::to_string(elapsed) + "s");
  c.note("peak in_use 4 across 100 misses, " + std::to_string(elapsed).substr(0, 4) + "s");
  return c;
}

// ---------------------------------------------------------------------------
// 6. LRU oracle equivalence: 1000-op traces over 50 keys, 100 seeds.

struct RefLru {
  uint64_t budget;
  std::deque<std::pair<std::string, uint64_t>> order;
  uint64_t bytes = 0;

  void insert(const std::string& ks, uint64_t size) {
    for (auto it = order.begin(); it != order.end(); ++it) {
      if (it->first == ks) {
        auto entry = *it;
        order.erase(it);
        order.push_front(entry);
        return;
      }
    }
    if (size > budget) return;
    while (!order.empty() && bytes + size > budget) {
      bytes -= order.back().second;
      order.pop_back();
    }
    order.push_front({ks, size});
    bytes += size;
  }

  void lookup(const std::string& ks) {
    for (auto it = order.begin(); it != order.end(); ++it) {
      if (it->first == ks) {
        auto entry = *it;
        order.erase(it);
        order.push_front(entry);
        return;
      }
    }
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, s] : order) out.push_back(k);
    return out;
  }
};

Check criterion_lru_oracle() {
  Check c;
  uint64_t mismatches = 0;
  for (uint64_t seed = 0; seed < 100 && c.ok; ++seed) {
    std::mt19937_64 rng(seed);
    const uint64_t budget = 300 + rng() % 400;
    L1Cache l1(budget);
    RefLru ref;
    ref.budget = budget;
    for (int op = 0; op < 1000; ++op) {
      const std::string table = "k" + std::to_string(rng() % 50);
      const CalibKey key{table, 1, "v"};
      const uint64_t size = 1 + std::hash<std::string>()(table) % 180;
      if (rng() % 10 < 7) {
        l1.insert(key, std::make_shared<const Bytes>(size, uint8_t(table[1])));
        ref.insert(cache_key_string(key), size);
      } else {
        l1.lookup(key);
        ref.lookup(cache_key_string(key));
      }
      if (l1.keys_by_recency() != ref.keys() || l1.bytes() != ref.bytes ||
          l1.bytes() > budget) {
        ++mismatches;
        c.expect(false, "diverged at seed " + std::to_string(seed) + " op " +
                            std::to_string(op));
        break;
      }
    }
  }
  c.note("100 seeds x 1000 ops, " + std::to_string(mismatches) + " divergences");
  return c;
}

// ---------------------------------------------------------------------------
// 7. Monitoring: severity filters, well-formed XML, threshold oracle.

bool acceptance_well_formed(const std::string& s);

std::vector<int64_t> acceptance_threshold_oracle(const ThresholdRule& rule,
                                                 const std::vector<int64_t>& hits) {
  std::vector<int64_t> fired;
  bool armed = true;
  const int64_t window = static_cast<int64_t>(rule.window_s) * 1000;
  for (size_t i = 0; i < hits.size(); ++i) {
    const int64_t now = hits[i];
    size_t before = 0, after = 0;
    for (size_t j = 0; j < hits.size(); ++j) {
      const bool in_window = hits[j] > now - window && hits[j] <= now;
      if (j < i && in_window) ++before;
      if (j <= i && in_window) ++after;
    }
    if (!armed && before <= rule.limit) armed = true;
    if (armed && after > rule.limit) {
      fired.push_back(now);
      armed = false;
    }
  }
  return fired;
}

Check criterion_monitoring() {
  Check c;
  std::mt19937_64 rng(321);

  // severity filter property for all three thresholds
  for (int sev_i = 0; sev_i < 3; ++sev_i) {
    const auto min_sev = static_cast<Severity>(sev_i);
    Monitor monitor;
    std::mutex mu;
    std::vector<std::string> received;
    monitor.subscribe(1, min_sev, [&](const std::string& xml) {
      std::lock_guard lk(mu);
      received.push_back(xml);
      return true;
    });
    std::vector<std::string> expected;
    for (int i = 0; i < 300; ++i) {
      Event ev;
      ev.ts_ms = i;
      ev.severity = static_cast<Severity>(rng() % 3);
      ev.source = "accept";
      ev.code = "prop.ev";
      ev.attrs = {{"n", std::to_string(i)}, {"x", i % 7 ? "<&\">" : "plain"}};
      if (ev.severity >= min_sev) expected.push_back(event_to_xml(ev));
      monitor.emit(ev);
    }
    const bool drained = dantest::eventually([&] {
      std::lock_guard lk(mu);
      return received.size() == expected.size();
    });
    std::lock_guard lk(mu);
    c.expect(drained && received == expected,
             "filter mismatch at min severity " + std::string(severity_name(min_sev)));
    for (const auto& xml : received) {
      if (!acceptance_well_formed(xml)) {
        c.expect(false, "ill-formed xml: " + xml);
        break;
      }
    }
  }

  // threshold oracle on randomized scripted timelines
  for (int iter = 0; iter < 60; ++iter) {
    ThresholdRule rule{"c.t", 1 + static_cast<uint32_t>(rng() % 6), 1 + (rng() % 5)};
    ThresholdTracker tracker({rule});
    std::vector<int64_t> hits;
    int64_t ts = 0;
    for (int i = 0; i < 80; ++i) {
      ts += static_cast<int64_t>(rng() % 3000);
      hits.push_back(ts);
    }
    std::vector<int64_t> fired;
    for (const int64_t h : hits) {
      const auto evs = tracker.record("c.t", h);
      for (size_t k = 0; k < evs.size(); ++k) fired.push_back(h);
      for (const auto& ev : evs) {
        if (!acceptance_well_formed(event_to_xml(ev))) c.expect(false, "threshold xml");
      }
    }
    if (fired != acceptance_threshold_oracle(rule, hits)) {
      c.expect(false, "threshold oracle mismatch at iter " + std::to_string(iter));
      break;
    }
  }
  c.note("3 severity filters, 60 threshold timelines, all XML well-formed");
  return c;
}

// ---------------------------------------------------------------------------
// 8. Wire protocol: 10,000 round-trips plus byte-exact golden fixtures.

Check criterion_wire() {
  Check c;
  std::mt19937_64 rng(888);
  const Mtype kinds[] = {Mtype::GetReq,   Mtype::GetResp,  Mtype::SubReq,    Mtype::Event,
                         Mtype::StatsReq, Mtype::StatsResp, Mtype::ConfigSet,
                         Mtype::ConfigAck, Mtype::Ping,     Mtype::Pong,      Mtype::Error};
  for (int i = 0; i < 10'000; ++i) {
    const Mtype mt = kinds[rng() % std::size(kinds)];
    Bytes body(rng() % 700);
    for (auto& b : body) b = static_cast<uint8_t>(rng());
    const Bytes frame = encode_frame(mt, body);
    Message msg;
    std::string err;
    size_t consumed = 0;
    if (decode_frame(frame, consumed, msg, err) != DecodeResult::Frame ||
        msg.mtype != mt || msg.body != body || consumed != frame.size()) {
      c.expect(false, "round-trip failed at iteration " + std::to_string(i));
      break;
    }
  }

  // golden fixtures (trailing CRC of the object verified against zlib offline)
  c.expect(hex(encode_frame(Mtype::Ping, "{}")) == "00000003097b7d", "PING {} fixture");
  c.expect(hex(encode_frame(Mtype::Ping, "")) == "0000000109", "empty PING fixture");

  const Bytes get_req = encode_frame(
      Mtype::GetReq, json{{"table", "T"}, {"run", 1}, {"variant", "v"}}.dump());
  c.expect(hex(get_req) ==
               "00000024017b2272756e223a312c227461626c65223a2254222c2276617269616e74"
               "223a2276227d",
           "GET_REQ fixture");

  const Bytes payload = encode_object({"T", 1, "v"}, RowSet{});
  c.expect(hex(payload) == "44414e310001540000000000000001000176000000000000d41c4354",
           "28-byte object fixture");
  GetRespMeta meta;
  meta.source = "BACKEND";
  meta.coalesced = false;
  meta.latency_ms = 0.0;
  meta.size_bytes = 28;
  const Bytes get_resp = encode_get_resp_frame(meta, payload);
  c.expect(hex(get_resp) ==
               "0000007602000000557b22636f616c6573636564223a66616c73652c226c6174656e"
               "63795f6d73223a302e302c2273697a655f6279746573223a32382c22736f75726365"
               "223a224241434b454e44222c22737461747573223a226f6b227d44414e3100015400"
               "00000000000001000176000000000000d41c4354",
           "GET_RESP fixture");

  const Bytes error_frame =
      encode_frame(Mtype::Error, error_body_json(2, "backend unavailable"));
  c.expect(hex(error_frame) ==
               "0000002b7f7b22636f6465223a322c226d657373616765223a226261636b656e6420"
               "756e617661696c61626c65227d",
           "ERROR fixture");

  c.note("10000 round-trips, 5 golden fixtures byte-exact");
  return c;
}

// ---------------------------------------------------------------------------
// 9. Counter conservation across every scenario this suite ran.

Check criterion_conservation() {
  Check c;
  c.expect(!g_conservation_checks.empty(), "no scenarios recorded");
  size_t failed = 0;
  for (const bool ok : g_conservation_checks) {
    if (!ok) ++failed;
  }
  c.expect(failed == 0, std::to_string(failed) + " scenario(s) broke the identity");
  c.note(std::to_string(g_conservation_checks.size()) + " scenario snapshots checked");
  return c;
}

// ---------------------------------------------------------------------------
// 10. Sustained rate: 3000 warm GETs of a ~4 KB object in under 60 s.

Check criterion_sustained_rate() {
  Check c;
  TempDir dir;
  gen_dataset(dir / "data", "magnet_pol", 1, "v1", 170, 3);  // ~4.1 KB encoded
  auto cfg = dantest::make_direct_config(dir / "data", dir.path(), 0);
  Server server(cfg);
  server.start();

  {
    Client warm(server.bound_addr());
    const auto res = warm.get({"magnet_pol", 1, "v1"});
    c.expect(res.payload.size() >= 1800 && res.payload.size() <= 4500,
             "object size " + std::to_string(res.payload.size()));
  }

  BenchOptions opt;
  opt.addr = server.bound_addr();
  opt.clients = 10;
  opt.requests_per_client = 300;
  opt.keys = {{"magnet_pol", 1, "v1"}};
  const auto t0 = Clock::now();
  const BenchReport report = run_bench(opt);
  const double elapsed = seconds_since(t0);

  c.expect(report.successes == 3000, "successes " + std::to_string(report.successes));
  c.expect(report.failures == 0, "failures " + std::to_string(report.failures));
  c.expect(report.counter_deltas["errors_total"] == 0, "server-side errors");
  c.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s");
  record_conservation(report.stats_after);
  c.expect(conservation_holds(report.stats_after), "conservation");
  {
    std::ostringstream os;
    os.precision(4);
    os << "3000 GETs in " << elapsed << "s (" << 3000.0 / elapsed << "/s), p95 "
       << report.p95_ms << " ms";
    c.note(os.str());
  }
  server.stop();
  return c;
}

// minimal strict parser: one self-closing element, quoted attrs, escaped text
bool acceptance_well_formed(const std::string& s) {
  size_t i = 0;
  auto name_start = [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_';
  };
  auto name_char = [&](char ch) {
    return name_start(ch) || (ch >= '0' && ch <= '9') || ch == '.' || ch == '-';
  };
  if (i >= s.size() || s[i] != '<') return false;
  ++i;
  if (i >= s.size() || !name_start(s[i])) return false;
  while (i < s.size() && name_char(s[i])) ++i;
  for (;;) {
    if (i + 1 < s.size() && s[i] == '/' && s[i + 1] == '>') return i + 2 == s.size();
    if (i >= s.size() || s[i] != ' ') return false;
    while (i < s.size() && s[i] == ' ') ++i;
    if (i + 1 < s.size() && s[i] == '/' && s[i + 1] == '>') return i + 2 == s.size();
    if (i >= s.size() || !name_start(s[i])) return false;
    while (i < s.size() && name_char(s[i])) ++i;
    if (i >= s.size() || s[i] != '=') return false;
    ++i;
    if (i >= s.size() || s[i] != '"') return false;
    ++i;
    while (i < s.size() && s[i] != '"') {
      if (s[i] == '<' || s[i] == '>') return false;
      if (s[i] == '&') {
        const std::string rest = s.substr(i);
        if (rest.rfind("&amp;", 0) == 0) i += 5;
        else if (rest.rfind("&lt;", 0) == 0) i += 4;
        else if (rest.rfind("&gt;", 0) == 0) i += 4;
        else if (rest.rfind("&quot;", 0) == 0) i += 6;
        else return false;
        continue;
      }
      ++i;
    }
    if (i >= s.size()) return false;
    ++i;
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "coalescing (50 clients, 1 cold key)", criterion_coalescing},
      {2, "cached speedup (warm p50 <= 1/4 cold p50)", criterion_cached_speedup},
      {3, "scaled SMT fidelity (800k rows, 19-31 MB, 20 sets in 25 MB L1)",
       criterion_smt_fidelity},
      {4, "outage resilience (root killed, leaf serves)", criterion_outage},
      {5, "pool throttle (100 misses, max_connections 4)", criterion_pool_throttle},
      {6, "LRU oracle equivalence (100 seeds x 1000 ops)", criterion_lru_oracle},
      {7, "monitoring (filters, XML, threshold oracle)", criterion_monitoring},
      {8, "wire protocol (10k round-trips, golden fixtures)", criterion_wire},
      {9, "counter conservation (all scenarios)", criterion_conservation},
      {10, "sustained rate (3000 warm GETs < 60 s)", criterion_sustained_rate},
  };

  int failed = 0;
  // criterion 9 aggregates conservation over the others; run it last
  std::vector<std::pair<const Criterion*, Check>> results;
  auto run_one = [&](const Criterion& criterion) {
    Check check;
    try {
      check = criterion.run();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    results.emplace_back(&criterion, std::move(check));
  };
  for (const auto& criterion : criteria) {
    if (criterion.id != 9) run_one(criterion);
  }
  for (const auto& criterion : criteria) {
    if (criterion.id == 9) run_one(criterion);
  }

  std::sort(results.begin(), results.end(),
            [](const auto& a, const auto& b) { return a.first->id < b.first->id; });
  for (const auto& [criterion, check] : results) {
    if (!check.ok) ++failed;
    std::printf("[%s] %2d. %s%s%s\n", check.ok ? "PASS" : "FAIL", criterion->id,
                criterion->name, check.detail.empty() ? "" : " -- ",
                check.detail.c_str());
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(results.size()) - failed,
              results.size());
  return failed;
}
