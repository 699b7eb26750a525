// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dan/monitor.hpp"
#include "dan/pool.hpp"

#include <json.hpp>

namespace dan {

enum class ServerMode { Direct, Proxy };

const char* mode_name(ServerMode m);

struct BackendConfig {
  std::string root_dir;
  uint32_t simulated_latency_ms = 0;
  bool fail_switch = false;
};

struct L2Config {
  std::string dir;
  uint64_t budget_bytes = 256ull * 1024 * 1024;
};

struct BrokerTuning {
  uint32_t max_inflight_keys = 1024;
  uint32_t fetch_timeout_ms = 5000;
};

struct MonitorConfig {
  std::string event_log_path;
  std::string min_log_severity = "INFO";
  std::vector<ThresholdRule> thresholds;
};

struct ServerConfig {
  std::string listen_addr = "127.0.0.1:0";
  ServerMode mode = ServerMode::Direct;
  std::string upstream_addr;  // PROXY only
  BackendConfig backend;      // DIRECT only
  PoolConfig pool;            // DIRECT only
  uint64_t l1_budget_bytes = 64ull * 1024 * 1024;
  L2Config l2;
  BrokerTuning broker;
  MonitorConfig monitor;
  std::string descriptors_dir;  // optional
};

// Validates mode-conditional fields; throws Malformed with the offending key.
ServerConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ServerConfig& cfg);
ServerConfig load_config_file(const std::string& path);  // throws Io / Malformed

}  // namespace dan
