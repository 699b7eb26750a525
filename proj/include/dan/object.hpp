// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dan {

using Bytes = std::vector<uint8_t>;

// Payloads are shared between cache tiers, in-flight fetches and connection
// writers without copying; the pointed-to bytes are immutable (WORM).
using PayloadPtr = std::shared_ptr<const Bytes>;

// Maximum size of one encoded object, and of one wire frame.
inline constexpr uint64_t kMaxObjectBytes = 64ull * 1024 * 1024;

enum class CType : uint8_t { Int = 1, Float = 2, String = 3 };

const char* ctype_name(CType t);

struct ColumnSpec {
  std::string name;
  CType ctype;

  bool operator==(const ColumnSpec&) const = default;
};

// INT = signed 64-bit, FLOAT = 64-bit IEEE-754, STRING = UTF-8.
using Value = std::variant<int64_t, double, std::string>;
using Row = std::vector<Value>;

struct RowSet {
  std::vector<ColumnSpec> columns;
  std::vector<Row> rows;
};

// The run-keyed identity of one calibration object.
struct CalibKey {
  std::string table;
  uint64_t run = 0;
  std::string variant;

  auto operator<=>(const CalibKey&) const = default;
};

struct CalibObject {
  CalibKey key;
  Bytes payload;        // canonical encoding, trailer included
  uint64_t size_bytes;  // == payload.size()
  uint32_t checksum;    // CRC-32 of payload minus its 4-byte trailer
};

// table non-empty, no control characters (< 0x20 or 0x7F).
bool valid_key(const CalibKey& key);

// Canonical big-endian encoding:
//   "DAN1" | u16 table len + table | u64 run | u16 variant len + variant |
//   u16 column count | per column (u16 name len + name + 1 type byte) |
//   u32 row count | rows (i64 / f64 bits / u32 len + utf8) | u32 CRC-32 trailer.
// Deterministic: equal inputs yield byte-identical outputs.
// Throws LimitExceeded when a length field overflows or the total exceeds
// 64 MiB, Malformed when the key or row set violates its invariants.
Bytes encode_object(const CalibKey& key, const RowSet& rows);

// Inverse of encode_object on its image. Accepts arbitrary bytes; throws
// Corrupt with a distinguishing detail on bad magic, truncation, length
// overrun, invalid type byte, invalid UTF-8, CRC mismatch or trailing bytes.
std::pair<CalibKey, RowSet> decode_object(std::span<const uint8_t> payload);

CalibObject make_object(const CalibKey& key, const RowSet& rows);

// "<esc(table)>/<run decimal>/<esc(variant)>" with '%' -> "%25", '/' -> "%2F".
// Injective over valid keys; names L2 files and statistics buckets.
std::string cache_key_string(const CalibKey& key);

// Strict UTF-8 (rejects overlong forms, surrogates and > U+10FFFF).
bool is_valid_utf8(std::string_view s);

}  // namespace dan
