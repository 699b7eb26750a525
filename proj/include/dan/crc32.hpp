// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace dan {

namespace detail {

// Reflected form of polynomial 0x04C11DB7.
constexpr std::array<uint32_t, 256> make_crc32_table() {
  std::array<uint32_t, 256> t{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) {
      c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
    }
    t[i] = c;
  }
  return t;
}

inline constexpr auto kCrc32Table = make_crc32_table();

}  // namespace detail

// CRC-32 (ISO-HDLC): init 0xFFFFFFFF, final xor 0xFFFFFFFF.
// Check value: crc32("123456789") == 0xCBF43926.
// crc32_update(crc32_update(0, a), b) == crc32 of the concatenation a+b.
inline uint32_t crc32_update(uint32_t crc, std::span<const uint8_t> data) {
  crc = ~crc;
  for (uint8_t b : data) {
    crc = detail::kCrc32Table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
  }
  return ~crc;
}

inline uint32_t crc32(std::span<const uint8_t> data) { return crc32_update(0, data); }

inline uint32_t crc32(std::string_view s) {
  return crc32(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

}  // namespace dan
