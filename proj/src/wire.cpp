// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/wire.hpp"

#include <cstring>

#include "dan/errors.hpp"

#include <json.hpp>

namespace dan {

using nlohmann::json;

bool known_mtype(uint8_t b) {
  return (b >= 0x01 && b <= 0x0A) || b == 0x7F;
}

const char* mtype_name(Mtype m) {
  switch (m) {
    case Mtype::GetReq: return "GET_REQ";
    case Mtype::GetResp: return "GET_RESP";
    case Mtype::SubReq: return "SUB_REQ";
    case Mtype::Event: return "EVENT";
    case Mtype::StatsReq: return "STATS_REQ";
    case Mtype::StatsResp: return "STATS_RESP";
    case Mtype::ConfigSet: return "CONFIG_SET";
    case Mtype::ConfigAck: return "CONFIG_ACK";
    case Mtype::Ping: return "PING";
    case Mtype::Pong: return "PONG";
    case Mtype::Error: return "ERROR";
  }
  return "?";
}

namespace {

void put_u32(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) << 24 | static_cast<uint32_t>(p[1]) << 16 |
         static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
}

}  // namespace

Bytes encode_frame(Mtype mtype, std::span<const uint8_t> body) {
  const uint64_t length = 1 + body.size();
  if (length > kMaxFrameBytes) {
    throw DanError(Err::LimitExceeded, "frame of " + std::to_string(length) + " bytes");
  }
  Bytes out;
  out.reserve(4 + length);
  put_u32(out, static_cast<uint32_t>(length));
  out.push_back(static_cast<uint8_t>(mtype));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Bytes encode_frame(Mtype mtype, std::string_view body) {
  return encode_frame(mtype, std::span<const uint8_t>(
                                 reinterpret_cast<const uint8_t*>(body.data()), body.size()));
}

DecodeResult decode_frame(std::span<const uint8_t> in, size_t& consumed, Message& out,
                          std::string& error) {
  consumed = 0;
  if (in.size() < 4) return DecodeResult::NeedMore;
  const uint32_t length = read_u32(in.data());
  if (length == 0) {
    error = "zero-length frame";
    return DecodeResult::Malformed;
  }
  if (length > kMaxFrameBytes) {
    error = "frame length " + std::to_string(length) + " exceeds 64 MiB";
    return DecodeResult::Malformed;
  }
  if (in.size() < 4 + static_cast<size_t>(length)) return DecodeResult::NeedMore;
  const uint8_t mt = in[4];
  if (!known_mtype(mt)) {
    error = "unknown message type " + std::to_string(mt);
    return DecodeResult::Malformed;
  }
  out.mtype = static_cast<Mtype>(mt);
  out.body.assign(in.begin() + 5, in.begin() + 4 + length);
  consumed = 4 + static_cast<size_t>(length);
  return DecodeResult::Frame;
}

void FrameReader::feed(std::span<const uint8_t> data) {
  if (off_ > 0 && off_ == buf_.size()) {
    buf_.clear();
    off_ = 0;
  }
  buf_.insert(buf_.end(), data.begin(), data.end());
}

DecodeResult FrameReader::next(Message& out, std::string& error) {
  size_t consumed = 0;
  const auto res = decode_frame(
      std::span<const uint8_t>(buf_.data() + off_, buf_.size() - off_), consumed, out, error);
  if (res == DecodeResult::Frame) {
    off_ += consumed;
    if (off_ == buf_.size() || off_ > (1u << 20)) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<ptrdiff_t>(off_));
      off_ = 0;
    }
  }
  return res;
}

std::string get_resp_meta_json(const GetRespMeta& meta) {
  json doc{{"status", meta.status},
           {"source", meta.source},
           {"coalesced", meta.coalesced},
           {"latency_ms", meta.latency_ms},
           {"size_bytes", meta.size_bytes}};
  return doc.dump();
}

Bytes encode_get_resp_head(const GetRespMeta& meta, uint64_t payload_size) {
  const std::string mj = get_resp_meta_json(meta);
  const uint64_t length = 1 + 4 + mj.size() + payload_size;
  if (length > kMaxFrameBytes) {
    throw DanError(Err::LimitExceeded, "GET_RESP frame of " + std::to_string(length) + " bytes");
  }
  Bytes out;
  out.reserve(4 + 1 + 4 + mj.size());
  put_u32(out, static_cast<uint32_t>(length));
  out.push_back(static_cast<uint8_t>(Mtype::GetResp));
  put_u32(out, static_cast<uint32_t>(mj.size()));
  out.insert(out.end(), mj.begin(), mj.end());
  return out;
}

Bytes encode_get_resp_frame(const GetRespMeta& meta, std::span<const uint8_t> payload) {
  Bytes out = encode_get_resp_head(meta, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::pair<GetRespMeta, Bytes> decode_get_resp_body(std::span<const uint8_t> body) {
  if (body.size() < 4) throw DanError(Err::Malformed, "GET_RESP body shorter than meta length");
  const uint32_t meta_len = read_u32(body.data());
  if (4 + static_cast<uint64_t>(meta_len) > body.size()) {
    throw DanError(Err::Malformed, "GET_RESP meta length overruns body");
  }
  auto doc = json::parse(body.begin() + 4, body.begin() + 4 + meta_len, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw DanError(Err::Malformed, "GET_RESP meta is not a JSON object");
  }
  GetRespMeta meta;
  meta.status = doc.value("status", std::string());
  meta.source = doc.value("source", std::string());
  meta.coalesced = doc.value("coalesced", false);
  meta.latency_ms = doc.value("latency_ms", 0.0);
  meta.size_bytes = doc.value("size_bytes", uint64_t{0});
  Bytes payload(body.begin() + 4 + meta_len, body.end());
  if (meta.size_bytes != payload.size()) {
    throw DanError(Err::Malformed, "GET_RESP payload size disagrees with meta");
  }
  return {std::move(meta), std::move(payload)};
}

std::string error_body_json(int code, std::string_view message) {
  json doc{{"code", code}, {"message", std::string(message)}};
  return doc.dump();
}

}  // namespace dan
