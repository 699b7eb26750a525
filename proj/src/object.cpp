// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/object.hpp"

#include <bit>
#include <cstring>
#include <unordered_set>

#include "dan/crc32.hpp"
#include "dan/errors.hpp"

namespace dan {

namespace {

constexpr char kMagic[4] = {'D', 'A', 'N', '1'};

void put_u16(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u64(Bytes& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v >> 32));
  put_u32(out, static_cast<uint32_t>(v));
}

void put_str16(Bytes& out, const std::string& s) {
  put_u16(out, static_cast<uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> buf) : buf_(buf) {}

  size_t remaining() const { return buf_.size() - pos_; }
  size_t pos() const { return pos_; }

  uint8_t u8(const char* what) {
    need(1, what);
    return buf_[pos_++];
  }

  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(buf_[pos_] << 8 | buf_[pos_ + 1]);
    pos_ += 2;
    return v;
  }

  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | buf_[pos_ + i];
    pos_ += 4;
    return v;
  }

  uint64_t u64(const char* what) {
    uint64_t hi = u32(what);
    return hi << 32 | u32(what);
  }

  std::string str(size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(size_t n, const char* what) {
    if (remaining() < n) {
      throw DanError(Err::Corrupt, std::string("truncated ") + what);
    }
  }

  std::span<const uint8_t> buf_;
  size_t pos_ = 0;
};

std::string checked_utf8(std::string s, const char* what) {
  if (!is_valid_utf8(s)) {
    throw DanError(Err::Corrupt, std::string("invalid UTF-8 in ") + what);
  }
  return s;
}

void check_columns(const std::vector<ColumnSpec>& columns, Err kind) {
  std::unordered_set<std::string_view> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c.name).second) {
      throw DanError(kind, "duplicate column name '" + c.name + "'");
    }
  }
}

}  // namespace

const char* ctype_name(CType t) {
  switch (t) {
    case CType::Int: return "INT";
    case CType::Float: return "FLOAT";
    case CType::String: return "STRING";
  }
  return "?";
}

const char* err_name(Err e) {
  switch (e) {
    case Err::NotFound: return "not found";
    case Err::BackendUnavailable: return "backend unavailable";
    case Err::Overloaded: return "overloaded";
    case Err::Malformed: return "malformed";
    case Err::Timeout: return "timeout";
    case Err::PoolTimeout: return "pool timeout";
    case Err::Corrupt: return "corrupt object";
    case Err::WormViolation: return "worm violation";
    case Err::LimitExceeded: return "limit exceeded";
    case Err::Io: return "io failure";
    case Err::Schema: return "schema error";
    case Err::Internal: return "internal error";
  }
  return "error";
}

int wire_code(Err e) {
  switch (e) {
    case Err::NotFound: return 1;
    case Err::BackendUnavailable: return 2;
    case Err::Overloaded: return 3;
    case Err::Malformed: return 4;
    case Err::Timeout:
    case Err::PoolTimeout: return 5;
    default: return 6;
  }
}

bool valid_key(const CalibKey& key) {
  if (key.table.empty()) return false;
  for (unsigned char c : key.table) {
    if (c < 0x20 || c == 0x7F) return false;
  }
  return is_valid_utf8(key.table) && is_valid_utf8(key.variant);
}

bool is_valid_utf8(std::string_view s) {
  size_t i = 0;
  const size_t n = s.size();
  while (i < n) {
    uint8_t c = static_cast<uint8_t>(s[i]);
    if (c < 0x80) {
      ++i;
      continue;
    }
    int len;
    uint32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (int k = 1; k < len; ++k) {
      uint8_t cc = static_cast<uint8_t>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = cp << 6 | (cc & 0x3F);
    }
    if (len == 2 && cp < 0x80) return false;
    if (len == 3 && cp < 0x800) return false;
    if (len == 4 && cp < 0x10000) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

Bytes encode_object(const CalibKey& key, const RowSet& rows) {
  if (!valid_key(key)) {
    throw DanError(Err::Malformed, "invalid key for table '" + key.table + "'");
  }
  if (key.table.size() > 0xFFFF) throw DanError(Err::LimitExceeded, "table name exceeds u16");
  if (key.variant.size() > 0xFFFF) throw DanError(Err::LimitExceeded, "variant exceeds u16");
  if (rows.columns.size() > 0xFFFF) throw DanError(Err::LimitExceeded, "column count exceeds u16");
  if (rows.rows.size() > 0xFFFFFFFFull) throw DanError(Err::LimitExceeded, "row count exceeds u32");
  check_columns(rows.columns, Err::Malformed);

  uint64_t total = 4 + 2 + key.table.size() + 8 + 2 + key.variant.size() + 2 + 4 + 4;
  for (const auto& c : rows.columns) {
    if (c.name.size() > 0xFFFF) throw DanError(Err::LimitExceeded, "column name exceeds u16");
    if (c.ctype != CType::Int && c.ctype != CType::Float && c.ctype != CType::String) {
      throw DanError(Err::Malformed, "unknown column type");
    }
    if (!is_valid_utf8(c.name)) throw DanError(Err::Malformed, "column name not UTF-8");
    total += 2 + c.name.size() + 1;
  }
  for (const auto& row : rows.rows) {
    if (row.size() != rows.columns.size()) {
      throw DanError(Err::Malformed, "row width does not match column count");
    }
    for (size_t ci = 0; ci < row.size(); ++ci) {
      const CType ct = rows.columns[ci].ctype;
      if (static_cast<size_t>(row[ci].index()) + 1 != static_cast<size_t>(ct)) {
        throw DanError(Err::Malformed, std::string("value kind does not match column '") +
                                           rows.columns[ci].name + "' of type " + ctype_name(ct));
      }
      if (ct == CType::String) {
        const auto& s = std::get<std::string>(row[ci]);
        if (s.size() > 0xFFFFFFFFull) throw DanError(Err::LimitExceeded, "string value exceeds u32");
        if (!is_valid_utf8(s)) throw DanError(Err::Malformed, "string value not UTF-8");
        total += 4 + s.size();
      } else {
        total += 8;
      }
    }
  }
  if (total > kMaxObjectBytes) {
    throw DanError(Err::LimitExceeded, "encoded object exceeds 64 MiB");
  }

  Bytes out;
  out.reserve(total);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_str16(out, key.table);
  put_u64(out, key.run);
  put_str16(out, key.variant);
  put_u16(out, static_cast<uint16_t>(rows.columns.size()));
  for (const auto& c : rows.columns) {
    put_str16(out, c.name);
    out.push_back(static_cast<uint8_t>(c.ctype));
  }
  put_u32(out, static_cast<uint32_t>(rows.rows.size()));
  for (const auto& row : rows.rows) {
    for (const auto& v : row) {
      if (const auto* i = std::get_if<int64_t>(&v)) {
        put_u64(out, static_cast<uint64_t>(*i));
      } else if (const auto* f = std::get_if<double>(&v)) {
        put_u64(out, std::bit_cast<uint64_t>(*f));  // NaN payloads preserved bit-exactly
      } else {
        const auto& s = std::get<std::string>(v);
        put_u32(out, static_cast<uint32_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
      }
    }
  }
  put_u32(out, crc32(std::span<const uint8_t>(out.data(), out.size())));
  return out;
}

std::pair<CalibKey, RowSet> decode_object(std::span<const uint8_t> payload) {
  if (payload.size() < 4 || std::memcmp(payload.data(), kMagic, 4) != 0) {
    throw DanError(Err::Corrupt, "bad magic");
  }
  if (payload.size() > kMaxObjectBytes) {
    throw DanError(Err::Corrupt, "object exceeds 64 MiB");
  }
  if (payload.size() < 8) {
    throw DanError(Err::Corrupt, "truncated trailer");
  }
  // Whole-buffer CRC first: any flipped byte reports as a checksum mismatch.
  const size_t body = payload.size() - 4;
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored = stored << 8 | payload[body + i];
  const uint32_t computed = crc32(payload.subspan(0, body));
  if (stored != computed) {
    throw DanError(Err::Corrupt, "crc mismatch");
  }

  Reader r(payload.subspan(0, body));
  r.str(4, "magic");
  CalibKey key;
  key.table = checked_utf8(r.str(r.u16("table length"), "table"), "table");
  key.run = r.u64("run");
  key.variant = checked_utf8(r.str(r.u16("variant length"), "variant"), "variant");
  if (!valid_key(key)) {
    throw DanError(Err::Corrupt, "invalid key in object");
  }

  RowSet rows;
  const uint16_t ncols = r.u16("column count");
  rows.columns.reserve(ncols);
  for (uint16_t i = 0; i < ncols; ++i) {
    ColumnSpec c;
    c.name = checked_utf8(r.str(r.u16("column name length"), "column name"), "column name");
    const uint8_t t = r.u8("column type");
    if (t < 1 || t > 3) {
      throw DanError(Err::Corrupt, "invalid type byte " + std::to_string(t));
    }
    c.ctype = static_cast<CType>(t);
    rows.columns.push_back(std::move(c));
  }
  check_columns(rows.columns, Err::Corrupt);

  const uint32_t nrows = r.u32("row count");
  rows.rows.reserve(nrows);
  for (uint32_t i = 0; i < nrows; ++i) {
    Row row;
    row.reserve(ncols);
    for (const auto& c : rows.columns) {
      switch (c.ctype) {
        case CType::Int:
          row.emplace_back(static_cast<int64_t>(r.u64("int value")));
          break;
        case CType::Float:
          row.emplace_back(std::bit_cast<double>(r.u64("float value")));
          break;
        case CType::String:
          row.emplace_back(checked_utf8(r.str(r.u32("string length"), "string value"), "string value"));
          break;
      }
    }
    rows.rows.push_back(std::move(row));
  }
  if (r.remaining() != 0) {
    throw DanError(Err::Corrupt, "trailing bytes after rows");
  }
  return {std::move(key), std::move(rows)};
}

CalibObject make_object(const CalibKey& key, const RowSet& rows) {
  CalibObject obj;
  obj.key = key;
  obj.payload = encode_object(key, rows);
  obj.size_bytes = obj.payload.size();
  const size_t body = obj.payload.size() - 4;
  uint32_t crc = 0;
  for (int i = 0; i < 4; ++i) crc = crc << 8 | obj.payload[body + i];
  obj.checksum = crc;
  return obj;
}

std::string cache_key_string(const CalibKey& key) {
  auto esc = [](const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
      if (c == '%') {
        out += "%25";
      } else if (c == '/') {
        out += "%2F";
      } else {
        out += c;
      }
    }
    return out;
  };
  return esc(key.table) + "/" + std::to_string(key.run) + "/" + esc(key.variant);
}

}  // namespace dan
