// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/client.hpp"

#include <chrono>

#include "dan/errors.hpp"

namespace dan {

using nlohmann::json;

Err err_from_wire_code(int code) {
  switch (code) {
    case 1: return Err::NotFound;
    case 2: return Err::BackendUnavailable;
    case 3: return Err::Overloaded;
    case 4: return Err::Malformed;
    case 5: return Err::Timeout;
    default: return Err::Internal;
  }
}

Client::Client(const std::string& addr, int timeout_ms) : timeout_ms_(timeout_ms) {
  auto [host, port] = split_addr(addr);
  conn_ = TcpConn::connect_to(host, port, timeout_ms);
}

Message Client::read_message(int timeout_ms) {
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  uint8_t buf[64 * 1024];
  for (;;) {
    Message msg;
    std::string err;
    const auto res = reader_.next(msg, err);
    if (res == DecodeResult::Frame) {
      if (msg.mtype == Mtype::Event) {
        events_.emplace_back(msg.body_view());
        continue;
      }
      return msg;
    }
    if (res == DecodeResult::Malformed) {
      throw DanError(Err::Malformed, "server sent malformed frame: " + err);
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (left.count() <= 0) throw DanError(Err::Timeout, "no response within deadline");
    const size_t n = conn_.recv_some(buf, sizeof(buf), static_cast<int>(left.count()));
    if (n == 0) throw DanError(Err::Io, "connection closed by server");
    reader_.feed(std::span<const uint8_t>(buf, n));
  }
}

Message Client::request(Mtype mtype, std::string_view body) {
  conn_.send_all(encode_frame(mtype, body));
  Message resp = read_message(timeout_ms_);
  if (resp.mtype == Mtype::Error) {
    auto doc = json::parse(resp.body_view(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw DanError(Err::Internal, "unparseable ERROR frame");
    }
    throw DanError(err_from_wire_code(doc.value("code", 6)),
                   doc.value("message", std::string("server error")));
  }
  return resp;
}

Client::GetResult Client::get(const CalibKey& key) {
  json body{{"table", key.table}, {"run", key.run}, {"variant", key.variant}};
  Message resp = request(Mtype::GetReq, body.dump());
  if (resp.mtype != Mtype::GetResp) {
    throw DanError(Err::Malformed,
                   std::string("expected GET_RESP, got ") + mtype_name(resp.mtype));
  }
  auto [meta, payload] = decode_get_resp_body(resp.body);
  return GetResult{std::move(meta), std::move(payload)};
}

json Client::stats() {
  Message resp = request(Mtype::StatsReq, "{}");
  if (resp.mtype != Mtype::StatsResp) {
    throw DanError(Err::Malformed,
                   std::string("expected STATS_RESP, got ") + mtype_name(resp.mtype));
  }
  auto doc = json::parse(resp.body_view(), nullptr, false);
  if (doc.is_discarded()) throw DanError(Err::Malformed, "STATS_RESP body is not JSON");
  return doc;
}

json Client::set_config(const std::string& param, const json& value) {
  json body{{"param", param}, {"value", value}};
  Message resp = request(Mtype::ConfigSet, body.dump());
  if (resp.mtype != Mtype::ConfigAck) {
    throw DanError(Err::Malformed,
                   std::string("expected CONFIG_ACK, got ") + mtype_name(resp.mtype));
  }
  return json::parse(resp.body_view(), nullptr, false);
}

json Client::subscribe(Severity min_severity) {
  json body{{"min_severity", severity_name(min_severity)}};
  Message resp = request(Mtype::SubReq, body.dump());
  if (resp.mtype != Mtype::ConfigAck) {
    throw DanError(Err::Malformed,
                   std::string("expected CONFIG_ACK, got ") + mtype_name(resp.mtype));
  }
  return json::parse(resp.body_view(), nullptr, false);
}

std::string Client::ping(std::string_view body) {
  Message resp = request(Mtype::Ping, body);
  if (resp.mtype != Mtype::Pong) {
    throw DanError(Err::Malformed, std::string("expected PONG, got ") + mtype_name(resp.mtype));
  }
  return std::string(resp.body_view());
}

std::optional<std::string> Client::next_event(int timeout_ms) {
  if (!events_.empty()) {
    std::string ev = std::move(events_.front());
    events_.pop_front();
    return ev;
  }
  uint8_t buf[64 * 1024];
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    Message msg;
    std::string err;
    const auto res = reader_.next(msg, err);
    if (res == DecodeResult::Frame) {
      if (msg.mtype == Mtype::Event) return std::string(msg.body_view());
      continue;  // stray non-event frames are dropped here
    }
    if (res == DecodeResult::Malformed) {
      throw DanError(Err::Malformed, "server sent malformed frame: " + err);
    }
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) return std::nullopt;
    size_t n;
    try {
      n = conn_.recv_some(buf, sizeof(buf), static_cast<int>(left.count()));
    } catch (const DanError& e) {
      if (e.kind() == Err::Timeout) return std::nullopt;
      throw;
    }
    if (n == 0) throw DanError(Err::Io, "connection closed by server");
    reader_.feed(std::span<const uint8_t>(buf, n));
  }
}

// ---------------------------------------------------------------------------
// UpstreamClient

UpstreamClient::UpstreamClient(std::string addr, int timeout_ms, Monitor* monitor)
    : addr_(std::move(addr)), timeout_ms_(timeout_ms), monitor_(monitor) {}

Bytes UpstreamClient::get(const CalibKey& key) {
  std::lock_guard lk(mu_);
  if (!client_) {
    try {
      client_.emplace(addr_, timeout_ms_);
    } catch (const DanError& e) {
      throw DanError(Err::BackendUnavailable, "upstream " + addr_ + ": " + e.what());
    }
  }
  Client::GetResult result;
  try {
    result = client_->get(key);
  } catch (const DanError& e) {
    switch (e.kind()) {
      case Err::NotFound:
        throw;  // relayed as-is; the connection is still good
      case Err::Timeout:
        client_.reset();
        throw;
      default:
        client_.reset();
        throw DanError(Err::BackendUnavailable, "upstream " + addr_ + ": " + e.what());
    }
  }
  try {
    auto [decoded_key, rows] = decode_object(result.payload);
    (void)rows;
    if (decoded_key != key) {
      throw DanError(Err::Corrupt, "upstream returned object for wrong key");
    }
  } catch (const DanError& e) {
    if (monitor_) monitor_->inc_counter("upstream.corrupt");
    throw DanError(Err::Corrupt, std::string("upstream payload invalid: ") + e.what());
  }
  return std::move(result.payload);
}

}  // namespace dan
