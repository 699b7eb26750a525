// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/config.hpp"

#include <fstream>

#include "dan/errors.hpp"

namespace dan {

using nlohmann::json;

const char* mode_name(ServerMode m) {
  return m == ServerMode::Direct ? "DIRECT" : "PROXY";
}

namespace {

template <class T>
T require(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw DanError(Err::Malformed, std::string("config: missing '") + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw DanError(Err::Malformed, std::string("config: bad value for '") + key + "'");
  }
}

template <class T>
T optional_field(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw DanError(Err::Malformed, std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace

ServerConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw DanError(Err::Malformed, "config: not a JSON object");
  ServerConfig cfg;
  cfg.listen_addr = optional_field<std::string>(doc, "listen_addr", cfg.listen_addr);

  const std::string mode = optional_field<std::string>(doc, "mode", "DIRECT");
  if (mode == "DIRECT") {
    cfg.mode = ServerMode::Direct;
  } else if (mode == "PROXY") {
    cfg.mode = ServerMode::Proxy;
  } else {
    throw DanError(Err::Malformed, "config: mode must be DIRECT or PROXY, got '" + mode + "'");
  }

  if (cfg.mode == ServerMode::Proxy) {
    cfg.upstream_addr = require<std::string>(doc, "upstream_addr");
  } else {
    if (!doc.contains("backend")) {
      throw DanError(Err::Malformed, "config: DIRECT mode requires 'backend'");
    }
    const auto& b = doc.at("backend");
    cfg.backend.root_dir = require<std::string>(b, "root_dir");
    cfg.backend.simulated_latency_ms =
        optional_field<uint32_t>(b, "simulated_latency_ms", 0);
    cfg.backend.fail_switch = optional_field<bool>(b, "fail_switch", false);
    if (doc.contains("pool")) {
      const auto& p = doc.at("pool");
      cfg.pool.max_connections = optional_field<uint32_t>(p, "max_connections", 4);
      cfg.pool.acquire_timeout_ms = optional_field<uint32_t>(p, "acquire_timeout_ms", 1000);
      if (cfg.pool.max_connections < 1) {
        throw DanError(Err::Malformed, "config: pool.max_connections must be >= 1");
      }
    }
  }

  cfg.l1_budget_bytes = optional_field<uint64_t>(doc, "l1_budget_bytes", cfg.l1_budget_bytes);
  if (cfg.l1_budget_bytes < 1) {
    throw DanError(Err::Malformed, "config: l1_budget_bytes must be >= 1");
  }

  if (!doc.contains("l2")) throw DanError(Err::Malformed, "config: missing 'l2'");
  const auto& l2 = doc.at("l2");
  cfg.l2.dir = require<std::string>(l2, "dir");
  cfg.l2.budget_bytes = optional_field<uint64_t>(l2, "budget_bytes", cfg.l2.budget_bytes);
  if (cfg.l2.budget_bytes < 1) {
    throw DanError(Err::Malformed, "config: l2.budget_bytes must be >= 1");
  }

  if (doc.contains("broker")) {
    const auto& br = doc.at("broker");
    cfg.broker.max_inflight_keys =
        optional_field<uint32_t>(br, "max_inflight_keys", cfg.broker.max_inflight_keys);
    cfg.broker.fetch_timeout_ms =
        optional_field<uint32_t>(br, "fetch_timeout_ms", cfg.broker.fetch_timeout_ms);
    if (cfg.broker.max_inflight_keys < 1 || cfg.broker.fetch_timeout_ms < 1) {
      throw DanError(Err::Malformed, "config: broker limits must be >= 1");
    }
  }

  if (doc.contains("monitor")) {
    const auto& m = doc.at("monitor");
    cfg.monitor.event_log_path = optional_field<std::string>(m, "event_log_path", "");
    cfg.monitor.min_log_severity =
        optional_field<std::string>(m, "min_log_severity", cfg.monitor.min_log_severity);
    if (!parse_severity(cfg.monitor.min_log_severity)) {
      throw DanError(Err::Malformed, "config: monitor.min_log_severity must be DEBUG/INFO/ERROR");
    }
    if (m.contains("thresholds")) {
      if (!m.at("thresholds").is_array()) {
        throw DanError(Err::Malformed, "config: monitor.thresholds must be an array");
      }
      for (const auto& r : m.at("thresholds")) {
        ThresholdRule rule;
        rule.counter = require<std::string>(r, "counter");
        rule.window_s = require<uint32_t>(r, "window_s");
        rule.limit = require<uint64_t>(r, "limit");
        if (rule.window_s < 1 || rule.limit < 1) {
          throw DanError(Err::Malformed, "config: threshold window_s and limit must be >= 1");
        }
        cfg.monitor.thresholds.push_back(std::move(rule));
      }
    }
  }

  cfg.descriptors_dir = optional_field<std::string>(doc, "descriptors_dir", "");
  return cfg;
}

json config_to_json(const ServerConfig& cfg) {
  json doc;
  doc["listen_addr"] = cfg.listen_addr;
  doc["mode"] = mode_name(cfg.mode);
  if (cfg.mode == ServerMode::Proxy) {
    doc["upstream_addr"] = cfg.upstream_addr;
  } else {
    doc["backend"] = {{"root_dir", cfg.backend.root_dir},
                      {"simulated_latency_ms", cfg.backend.simulated_latency_ms},
                      {"fail_switch", cfg.backend.fail_switch}};
    doc["pool"] = {{"max_connections", cfg.pool.max_connections},
                   {"acquire_timeout_ms", cfg.pool.acquire_timeout_ms}};
  }
  doc["l1_budget_bytes"] = cfg.l1_budget_bytes;
  doc["l2"] = {{"dir", cfg.l2.dir}, {"budget_bytes", cfg.l2.budget_bytes}};
  doc["broker"] = {{"max_inflight_keys", cfg.broker.max_inflight_keys},
                   {"fetch_timeout_ms", cfg.broker.fetch_timeout_ms}};
  json thresholds = json::array();
  for (const auto& r : cfg.monitor.thresholds) {
    thresholds.push_back(
        {{"counter", r.counter}, {"window_s", r.window_s}, {"limit", r.limit}});
  }
  doc["monitor"] = {{"event_log_path", cfg.monitor.event_log_path},
                    {"min_log_severity", cfg.monitor.min_log_severity},
                    {"thresholds", std::move(thresholds)}};
  if (!cfg.descriptors_dir.empty()) doc["descriptors_dir"] = cfg.descriptors_dir;
  return doc;
}

ServerConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DanError(Err::Io, "cannot open config " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw DanError(Err::Malformed, "config " + path + " is not valid JSON");
  return config_from_json(doc);
}

}  // namespace dan
