// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/backend.hpp"

#include <fstream>
#include <system_error>
#include <thread>

#include "dan/errors.hpp"

namespace dan {

namespace {

std::string esc_component(const std::string& s) {
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
}

Bytes read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DanError(Err::Io, "cannot open " + p.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DanError(Err::Io, "read failed for " + p.string());
  return data;
}

}  // namespace

std::filesystem::path dataset_path(const std::filesystem::path& root, const CalibKey& key) {
  return root / esc_component(key.table) /
         (std::to_string(key.run) + "." + esc_component(key.variant) + ".rows");
}

Row gen_dataset_row(uint64_t i, uint64_t seed) {
  const uint64_t ped = (i * 2654435761ull + seed) % 1000000ull;
  const uint64_t gai = (i * 40503ull + seed) % 1000ull;
  return Row{static_cast<int64_t>(i), static_cast<double>(ped) / 1000.0,
             1.0 + static_cast<double>(gai) / 1000.0};
}

std::filesystem::path gen_dataset(const std::filesystem::path& root, const std::string& table,
                                  uint64_t run, const std::string& variant, uint64_t n_rows,
                                  uint64_t seed) {
  const CalibKey key{table, run, variant};
  RowSet rows;
  rows.columns = {{"channel_id", CType::Int}, {"pedestal", CType::Float}, {"gain", CType::Float}};
  rows.rows.reserve(n_rows);
  for (uint64_t i = 0; i < n_rows; ++i) {
    rows.rows.push_back(gen_dataset_row(i, seed));
  }
  const Bytes payload = encode_object(key, rows);

  const auto path = dataset_path(root, key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DanError(Err::Io, "cannot create " + path.parent_path().string());

  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DanError(Err::Io, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw DanError(Err::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DanError(Err::Io, "rename failed for " + path.string());
  return path;
}

FileBackend::FileBackend(DataSourceSpec spec) : spec_(std::move(spec)), fail_(spec_.fail_switch) {
  std::error_code ec;
  if (!std::filesystem::is_directory(spec_.root_dir, ec)) {
    throw DanError(Err::Io, "backend root not readable: " + spec_.root_dir.string());
  }
}

RowSet FileBackend::query(const CalibKey& key) {
  if (fail_.load()) {
    throw DanError(Err::BackendUnavailable, "backend fail switch is set");
  }
  if (spec_.simulated_latency_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(spec_.simulated_latency_ms));
  }
  const auto path = dataset_path(spec_.root_dir, key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw DanError(Err::NotFound, "no run set " + cache_key_string(key));
  }
  Bytes data;
  try {
    data = read_file(path);
  } catch (const DanError& e) {
    throw DanError(Err::BackendUnavailable, e.what());
  }
  try {
    auto [file_key, rows] = decode_object(data);
    if (file_key != key) {
      throw DanError(Err::Corrupt, "run-set file key mismatch for " + cache_key_string(key));
    }
    return std::move(rows);
  } catch (const DanError& e) {
    if (e.kind() == Err::Corrupt) {
      throw DanError(Err::Corrupt, "run-set file invalid: " + std::string(e.what()));
    }
    throw;
  }
}

}  // namespace dan
