// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <string>

#include "dan/broker.hpp"
#include "dan/monitor.hpp"
#include "dan/object.hpp"
#include "dan/tcp.hpp"
#include "dan/wire.hpp"

#include <json.hpp>

namespace dan {

Err err_from_wire_code(int code);

// One connection, one request at a time. EVENT frames arriving between a
// request and its response are queued and read via next_event().
class Client {
 public:
  Client(const std::string& addr, int timeout_ms = 10000);

  struct GetResult {
    GetRespMeta meta;
    Bytes payload;
  };

  // Throws DanError mapped from ERROR frames (NotFound, BackendUnavailable,
  // Overloaded, Malformed, Timeout, Internal) or Io/Timeout from transport.
  GetResult get(const CalibKey& key);

  nlohmann::json stats();
  nlohmann::json set_config(const std::string& param, const nlohmann::json& value);
  nlohmann::json subscribe(Severity min_severity);
  std::string ping(std::string_view body = "");

  // Next EVENT body (XML); nullopt on timeout.
  std::optional<std::string> next_event(int timeout_ms);

  void close() { conn_.close(); }

 private:
  Message request(Mtype mtype, std::string_view body);
  Message read_message(int timeout_ms);

  TcpConn conn_;
  FrameReader reader_;
  std::deque<std::string> events_;
  int timeout_ms_;
};

// Proxy-mode upstream channel: one connection, serialized requests,
// reconnect on error, CRC-validated payloads.
class UpstreamClient {
 public:
  UpstreamClient(std::string addr, int timeout_ms, Monitor* monitor = nullptr);

  // Throws NotFound (relayed), Timeout, Corrupt (validation failure) or
  // BackendUnavailable (everything transport- or upstream-side).
  Bytes get(const CalibKey& key);

 private:
  std::string addr_;
  int timeout_ms_;
  Monitor* monitor_;
  std::mutex mu_;
  std::optional<Client> client_;
};

class UpstreamOrigin : public Origin {
 public:
  explicit UpstreamOrigin(UpstreamClient& client) : client_(client) {}
  Bytes fetch(const CalibKey& key) override { return client_.get(key); }
  Source source() const override { return Source::Upstream; }

 private:
  UpstreamClient& client_;
};

}  // namespace dan
