// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/server.hpp"

#include <filesystem>

namespace dan {

using nlohmann::json;

namespace {

Monitor::Options monitor_options(const ServerConfig& cfg) {
  Monitor::Options opt;
  opt.event_log_path = cfg.monitor.event_log_path;
  opt.min_log_severity = parse_severity(cfg.monitor.min_log_severity).value_or(Severity::Info);
  opt.thresholds = cfg.monitor.thresholds;
  return opt;
}

}  // namespace

Server::Server(ServerConfig cfg)
    : cfg_(std::move(cfg)), monitor_(monitor_options(cfg_)) {
  if (!cfg_.descriptors_dir.empty()) {
    descriptors_ = DescriptorSet::load_dir(cfg_.descriptors_dir);
  }

  cache_.emplace(cfg_.l1_budget_bytes,
                 L2Cache::Options{std::filesystem::path(cfg_.l2.dir), cfg_.l2.budget_bytes},
                 &monitor_);

  if (cfg_.mode == ServerMode::Direct) {
    backend_.emplace(DataSourceSpec{cfg_.backend.root_dir, cfg_.backend.simulated_latency_ms,
                                    cfg_.backend.fail_switch});
    pool_.emplace(cfg_.pool);
    origin_ = std::make_unique<DirectOrigin>(*backend_, *pool_, &descriptors_);
  } else {
    upstream_.emplace(cfg_.upstream_addr, static_cast<int>(cfg_.broker.fetch_timeout_ms),
                      &monitor_);
    origin_ = std::make_unique<UpstreamOrigin>(*upstream_);
  }
  broker_.emplace(BrokerConfig{cfg_.broker.max_inflight_keys, cfg_.broker.fetch_timeout_ms},
                  *cache_, *origin_, monitor_);
}

Server::~Server() { stop(); }

void Server::start() {
  auto [host, port] = split_addr(cfg_.listen_addr);
  listener_ = TcpListener::listen_on(host, port);
  started_at_ = std::chrono::steady_clock::now();
  running_.store(true);
  accept_thread_ = std::thread([this] { accept_loop(); });
  monitor_.emit(Severity::Info, "server", "server.started",
                {{"addr", bound_addr()}, {"mode", mode_name(cfg_.mode)}});
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard lk(conns_mu_);
    for (auto& [id, conn] : conns_) {
      conn->open.store(false);
      conn->sock.shutdown_both();
    }
  }
  std::unique_lock lk(conns_mu_);
  conns_cv_.wait(lk, [this] { return active_handlers_ == 0; });
}

std::string Server::bound_addr() const {
  return listener_.bound_addr();
}

uint16_t Server::bound_port() const { return listener_.bound_port(); }

void Server::accept_loop() {
  while (running_.load()) {
    TcpConn sock;
    try {
      sock = listener_.accept_conn();
    } catch (const DanError&) {
      break;  // listener closed
    }
    auto conn = std::make_shared<Conn>();
    conn->id = next_conn_id_.fetch_add(1);
    conn->sock = std::move(sock);
    {
      std::lock_guard lk(conns_mu_);
      if (!running_.load()) break;
      conns_.emplace(conn->id, conn);
      ++active_handlers_;
    }
    std::thread([this, conn] { handle_conn(conn); }).detach();
  }
}

void Server::handle_conn(std::shared_ptr<Conn> conn) {
  FrameReader reader;
  uint8_t buf[64 * 1024];
  try {
    for (;;) {
      const size_t n = conn->sock.recv_some(buf, sizeof(buf), -1);
      if (n == 0) break;
      reader.feed(std::span<const uint8_t>(buf, n));
      bool closing = false;
      for (;;) {
        Message msg;
        std::string err;
        const auto res = reader.next(msg, err);
        if (res == DecodeResult::NeedMore) break;
        if (res == DecodeResult::Malformed) {
          send_error(*conn, Err::Malformed, err);
          closing = true;
          break;
        }
        handle_message(conn, msg);
      }
      if (closing) break;
    }
  } catch (const std::exception&) {
    // connection torn down mid-request; nothing to answer
  }
  monitor_.unsubscribe(conn->id);
  conn->open.store(false);
  conn->sock.close();
  {
    std::lock_guard lk(conns_mu_);
    conns_.erase(conn->id);
    --active_handlers_;
  }
  conns_cv_.notify_all();
}

void Server::send_frame(Conn& conn, const Bytes& frame) {
  std::lock_guard lk(conn.write_mu);
  conn.sock.send_all(frame);
}

void Server::send_error(Conn& conn, Err err, const std::string& message) {
  try {
    send_frame(conn, encode_frame(Mtype::Error, error_body_json(wire_code(err), message)));
  } catch (const std::exception&) {
    // peer already gone
  }
}

void Server::handle_get(const std::shared_ptr<Conn>& conn, const json& body) {
  CalibKey key;
  if (!body.contains("table") || !body["table"].is_string() || !body.contains("run") ||
      !body["run"].is_number_unsigned()) {
    send_error(*conn, Err::Malformed, "GET_REQ needs string 'table' and unsigned 'run'");
    return;
  }
  key.table = body["table"].get<std::string>();
  key.run = body["run"].get<uint64_t>();
  key.variant = body.value("variant", std::string());
  if (!valid_key(key)) {
    send_error(*conn, Err::Malformed, "invalid key");
    return;
  }

  FetchOutcome outcome;
  try {
    outcome = broker_->fetch(key);
  } catch (const DanError& e) {
    send_error(*conn, e.kind(), e.what());
    return;
  }

  GetRespMeta meta;
  meta.source = source_name(outcome.source);
  meta.coalesced = outcome.coalesced;
  meta.latency_ms = outcome.latency_ms;
  meta.size_bytes = outcome.payload->size();
  const Bytes head = encode_get_resp_head(meta, outcome.payload->size());
  std::lock_guard lk(conn->write_mu);
  conn->sock.send_all(head);
  conn->sock.send_all(*outcome.payload);
}

void Server::handle_message(const std::shared_ptr<Conn>& conn, const Message& msg) {
  json body;
  const bool wants_json = msg.mtype == Mtype::GetReq || msg.mtype == Mtype::SubReq ||
                          msg.mtype == Mtype::ConfigSet;
  if (wants_json) {
    body = json::parse(msg.body_view(), nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      send_error(*conn, Err::Malformed, "body is not a JSON object");
      return;
    }
  }

  switch (msg.mtype) {
    case Mtype::GetReq:
      handle_get(conn, body);
      return;

    case Mtype::SubReq: {
      const auto sev = parse_severity(body.value("min_severity", std::string()));
      if (!sev) {
        send_error(*conn, Err::Malformed, "min_severity must be DEBUG/INFO/ERROR");
        return;
      }
      std::weak_ptr<Conn> weak = conn;
      monitor_.subscribe(conn->id, *sev, [this, weak](const std::string& xml) {
        auto c = weak.lock();
        if (!c || !c->open.load()) return false;
        try {
          send_frame(*c, encode_frame(Mtype::Event, xml));
          return true;
        } catch (const std::exception&) {
          return false;
        }
      });
      json ack{{"status", "ok"},
               {"param", "subscription"},
               {"min_severity", severity_name(*sev)}};
      send_frame(*conn, encode_frame(Mtype::ConfigAck, ack.dump()));
      return;
    }

    case Mtype::StatsReq:
      send_frame(*conn, encode_frame(Mtype::StatsResp, stats_snapshot().dump()));
      return;

    case Mtype::ConfigSet: {
      if (!body.contains("param") || !body["param"].is_string() || !body.contains("value")) {
        send_error(*conn, Err::Malformed, "CONFIG_SET needs 'param' and 'value'");
        return;
      }
      try {
        const json ack = apply_config(body["param"].get<std::string>(), body["value"]);
        send_frame(*conn, encode_frame(Mtype::ConfigAck, ack.dump()));
      } catch (const DanError& e) {
        send_error(*conn, e.kind(), e.what());
      }
      return;
    }

    case Mtype::Ping:
      send_frame(*conn, encode_frame(Mtype::Pong, msg.body_view()));
      return;

    default:
      send_error(*conn, Err::Malformed,
                 std::string("unexpected message type ") + mtype_name(msg.mtype));
      return;
  }
}

namespace {

uint64_t numeric_value(const json& value, const std::string& param) {
  if (value.is_number_unsigned()) return value.get<uint64_t>();
  if (value.is_string()) {
    const std::string& s = value.get<std::string>();
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
      return std::stoull(s);
    }
  }
  throw DanError(Err::Malformed, "value for " + param + " must be an unsigned integer");
}

}  // namespace

json Server::apply_config(const std::string& param, const json& value) {
  json applied = value;
  if (param == "l1_budget_bytes") {
    const uint64_t v = numeric_value(value, param);
    if (v < 1) throw DanError(Err::Malformed, "l1_budget_bytes must be >= 1");
    cache_->l1().set_budget(v);
    std::lock_guard lk(cfg_mu_);
    cfg_.l1_budget_bytes = v;
    applied = v;
  } else if (param == "pool.max_connections") {
    if (!pool_) throw DanError(Err::Malformed, "no pool in PROXY mode");
    const uint64_t v = numeric_value(value, param);
    if (v < 1 || v > 0xFFFFFFFFull) {
      throw DanError(Err::Malformed, "pool.max_connections must be >= 1");
    }
    pool_->set_max_connections(static_cast<uint32_t>(v));
    std::lock_guard lk(cfg_mu_);
    cfg_.pool.max_connections = static_cast<uint32_t>(v);
    applied = v;
  } else if (param == "broker.max_inflight_keys") {
    const uint64_t v = numeric_value(value, param);
    if (v < 1 || v > 0xFFFFFFFFull) {
      throw DanError(Err::Malformed, "broker.max_inflight_keys must be >= 1");
    }
    broker_->set_max_inflight(static_cast<uint32_t>(v));
    std::lock_guard lk(cfg_mu_);
    cfg_.broker.max_inflight_keys = static_cast<uint32_t>(v);
    applied = v;
  } else if (param == "monitor.min_log_severity") {
    if (!value.is_string()) {
      throw DanError(Err::Malformed, "monitor.min_log_severity must be a string");
    }
    const auto sev = parse_severity(value.get<std::string>());
    if (!sev) throw DanError(Err::Malformed, "min_log_severity must be DEBUG/INFO/ERROR");
    monitor_.set_min_log_severity(*sev);
    std::lock_guard lk(cfg_mu_);
    cfg_.monitor.min_log_severity = severity_name(*sev);
    applied = severity_name(*sev);
  } else {
    throw DanError(Err::Malformed, "unknown config param '" + param + "'");
  }

  monitor_.emit(Severity::Info, "server", "config.changed",
                {{"param", param}, {"value", applied.dump()}});
  return json{{"status", "ok"}, {"param", param}, {"value", applied}};
}

json Server::stats_snapshot() const {
  const auto id = monitor_.identity_snapshot();
  const double uptime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_at_).count();

  json counters{{"requests_total", id.requests_total},
                {"l1_hits", id.l1_hits},
                {"l2_hits", id.l2_hits},
                {"backend_queries", id.backend_queries},
                {"upstream_queries", id.upstream_queries},
                {"coalesced_requests", id.coalesced_requests},
                {"errors_total", id.errors_total},
                {"bytes_served", id.bytes_served},
                {"misses", cache_->tier_misses()},
                {"evictions_l1", cache_->l1().evictions()},
                {"evictions_l2", cache_->l2().evictions()},
                {"corrupt_drops", cache_->l2().corrupt_drops()},
                {"events_error", monitor_.error_events()},
                {"events_dropped", monitor_.dropped_events()}};
  for (const auto& [k, v] : monitor_.aux_counters()) counters[k] = v;

  json gauges{{"l1_bytes", cache_->l1().bytes()},
              {"l2_bytes", cache_->l2().bytes()},
              {"l1_entries", cache_->l1().entries()},
              {"l2_entries", cache_->l2().entries()},
              {"inflight_keys", broker_->inflight_size()},
              {"subscriptions", monitor_.subscription_count()}};

  json snapshot;
  snapshot["uptime_s"] = uptime_s;
  snapshot["counters"] = std::move(counters);
  snapshot["gauges"] = std::move(gauges);

  if (pool_) {
    const auto ps = pool_->state();
    snapshot["pool"] = {{"max_connections", ps.max_connections},
                        {"in_use", ps.in_use},
                        {"waiters", ps.waiters},
                        {"peak_in_use", ps.peak_in_use},
                        {"total_acquired", ps.total_acquired},
                        {"timeouts", ps.timeouts}};
  }

  json per_table = json::object();
  for (const auto& [table, count] : id.per_table) per_table[table] = count;
  snapshot["per_table"] = std::move(per_table);

  const uint64_t responses = id.requests_total - id.errors_total;
  snapshot["derived"] = {
      {"requests_per_hour", uptime_s > 0 ? id.requests_total / (uptime_s / 3600.0) : 0.0},
      {"mean_response_bytes",
       responses > 0 ? static_cast<double>(id.bytes_served) / responses : 0.0}};

  {
    std::lock_guard lk(cfg_mu_);
    snapshot["config"] = config_to_json(cfg_);
  }
  return snapshot;
}

}  // namespace dan
