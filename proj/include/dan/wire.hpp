// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "dan/object.hpp"

namespace dan {

// Frame: u32 BE length (mtype + body), mtype byte, body bytes.
inline constexpr uint32_t kMaxFrameBytes = 67'108'864;  // 64 MiB

enum class Mtype : uint8_t {
  GetReq = 0x01,
  GetResp = 0x02,
  SubReq = 0x03,
  Event = 0x04,
  StatsReq = 0x05,
  StatsResp = 0x06,
  ConfigSet = 0x07,
  ConfigAck = 0x08,
  Ping = 0x09,
  Pong = 0x0A,
  Error = 0x7F,
};

bool known_mtype(uint8_t b);
const char* mtype_name(Mtype m);

struct Message {
  Mtype mtype;
  Bytes body;

  std::string_view body_view() const {
    return {reinterpret_cast<const char*>(body.data()), body.size()};
  }
};

// Throws LimitExceeded when 1 + body size exceeds 64 MiB.
Bytes encode_frame(Mtype mtype, std::span<const uint8_t> body);
Bytes encode_frame(Mtype mtype, std::string_view body);

enum class DecodeResult { Frame, NeedMore, Malformed };

// Incremental: with fewer than 4 header bytes or fewer than `length` payload
// bytes available, returns NeedMore and consumes nothing; otherwise consumes
// exactly one frame. Malformed (zero/oversized length, unknown mtype) means
// the connection must be closed after sending an ERROR frame.
DecodeResult decode_frame(std::span<const uint8_t> in, size_t& consumed, Message& out,
                          std::string& error);

// Buffering wrapper for a byte stream.
class FrameReader {
 public:
  void feed(std::span<const uint8_t> data);
  DecodeResult next(Message& out, std::string& error);
  size_t buffered() const { return buf_.size() - off_; }

 private:
  Bytes buf_;
  size_t off_ = 0;
};

// GET_RESP body: u32 BE meta length, meta JSON, raw object payload.
struct GetRespMeta {
  std::string status = "ok";
  std::string source;
  bool coalesced = false;
  double latency_ms = 0;
  uint64_t size_bytes = 0;
};

std::string get_resp_meta_json(const GetRespMeta& meta);
// Frame header + mtype + meta length + meta; the raw payload follows on the
// wire (written separately, so 25 MB objects are never copied into a frame).
Bytes encode_get_resp_head(const GetRespMeta& meta, uint64_t payload_size);
Bytes encode_get_resp_frame(const GetRespMeta& meta, std::span<const uint8_t> payload);
std::pair<GetRespMeta, Bytes> decode_get_resp_body(std::span<const uint8_t> body);

std::string error_body_json(int code, std::string_view message);

}  // namespace dan
