// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>

#include "dan/backend.hpp"
#include "dan/broker.hpp"
#include "dan/cache.hpp"
#include "dan/client.hpp"
#include "dan/config.hpp"
#include "dan/monitor.hpp"
#include "dan/pool.hpp"
#include "dan/schemagen.hpp"
#include "dan/tcp.hpp"
#include "dan/wire.hpp"

#include <json.hpp>

namespace dan {

// The serving process: accept loop, one handler per connection, shared
// broker/cache/monitor. Writes to one connection are serialized, so EVENT
// pushes never interleave mid-frame with responses.
class Server {
 public:
  explicit Server(ServerConfig cfg);
  ~Server();

  void start();  // binds listen_addr (port 0 = ephemeral) and begins serving
  void stop();   // closes the listener and every connection, joins handlers

  std::string bound_addr() const;
  uint16_t bound_port() const;

  nlohmann::json stats_snapshot() const;
  // Dynamic reconfiguration; throws Malformed on unknown param or bad value
  // (state unchanged). Known params: l1_budget_bytes, pool.max_connections,
  // broker.max_inflight_keys, monitor.min_log_severity.
  nlohmann::json apply_config(const std::string& param, const nlohmann::json& value);

  Monitor& monitor() { return monitor_; }
  Broker& broker() { return *broker_; }
  TieredCache& cache() { return *cache_; }
  FileBackend* backend() { return backend_ ? &*backend_ : nullptr; }
  SessionPool* pool() { return pool_ ? &*pool_ : nullptr; }

 private:
  struct Conn {
    uint64_t id = 0;
    TcpConn sock;
    std::mutex write_mu;
    std::atomic<bool> open{true};
  };

  void accept_loop();
  void handle_conn(std::shared_ptr<Conn> conn);
  void handle_message(const std::shared_ptr<Conn>& conn, const Message& msg);
  void send_frame(Conn& conn, const Bytes& frame);
  void send_error(Conn& conn, Err err, const std::string& message);
  void handle_get(const std::shared_ptr<Conn>& conn, const nlohmann::json& body);

  ServerConfig cfg_;
  mutable std::mutex cfg_mu_;

  Monitor monitor_;
  DescriptorSet descriptors_;
  std::optional<TieredCache> cache_;
  std::optional<FileBackend> backend_;
  std::optional<SessionPool> pool_;
  std::optional<UpstreamClient> upstream_;
  std::unique_ptr<Origin> origin_;
  std::optional<Broker> broker_;

  TcpListener listener_;
  std::thread accept_thread_;
  std::atomic<bool> running_{false};

  std::mutex conns_mu_;
  std::condition_variable conns_cv_;
  std::unordered_map<uint64_t, std::shared_ptr<Conn>> conns_;
  size_t active_handlers_ = 0;
  std::atomic<uint64_t> next_conn_id_{1};

  std::chrono::steady_clock::time_point started_at_;
};

}  // namespace dan
