// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

// danserv: run-keyed calibration data server and its operator tools.
// Subcommands: serve, get, gen-data, bench, stats, subscribe, set-config,
// schemagen. Exit codes: 0 success, 1 request error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "dan/backend.hpp"
#include "dan/bench.hpp"
#include "dan/client.hpp"
#include "dan/config.hpp"
#include "dan/schemagen.hpp"
#include "dan/server.hpp"

#include <CLI11.hpp>
#include <json.hpp>

using nlohmann::json;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

int cmd_serve(const std::string& config_path) {
  dan::ServerConfig cfg = dan::load_config_file(config_path);
  dan::Server server(cfg);
  server.start();
  std::printf("listening on %s\n", server.bound_addr().c_str());
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  return 0;
}

int cmd_get(const std::string& addr, const dan::CalibKey& key, const std::string& out_path,
            bool print_rows) {
  dan::Client client(addr);
  auto result = client.get(key);
  json meta{{"status", result.meta.status},
            {"source", result.meta.source},
            {"coalesced", result.meta.coalesced},
            {"latency_ms", result.meta.latency_ms},
            {"size_bytes", result.meta.size_bytes}};
  auto [decoded_key, rows] = dan::decode_object(result.payload);
  meta["key"] = dan::cache_key_string(decoded_key);
  meta["row_count"] = rows.rows.size();
  std::printf("%s\n", meta.dump(2).c_str());
  if (print_rows) {
    for (const auto& row : rows.rows) {
      std::string line;
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) line += "\t";
        if (const auto* v = std::get_if<int64_t>(&row[i])) {
          line += std::to_string(*v);
        } else if (const auto* f = std::get_if<double>(&row[i])) {
          char buf[64];
          snprintf(buf, sizeof(buf), "%.17g", *f);
          line += buf;
        } else {
          line += std::get<std::string>(row[i]);
        }
      }
      std::printf("%s\n", line.c_str());
    }
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(result.payload.data()),
              static_cast<std::streamsize>(result.payload.size()));
    if (!out) {
      std::fprintf(stderr, "error: cannot write %s\n", out_path.c_str());
      return 1;
    }
  }
  return 0;
}

dan::CalibKey parse_key_spec(const std::string& spec) {
  // T/N/V with the same escaping as cache key strings
  auto unesc = [](const std::string& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '%' && i + 2 < s.size() && s[i + 1] == '2') {
        if (s[i + 2] == '5') {
          out += '%';
          i += 2;
          continue;
        }
        if (s[i + 2] == 'F' || s[i + 2] == 'f') {
          out += '/';
          i += 2;
          continue;
        }
      }
      out += s[i];
    }
    return out;
  };
  const auto p1 = spec.find('/');
  const auto p2 = spec.find('/', p1 == std::string::npos ? p1 : p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos) {
    throw CLI::ValidationError("--key", "expected <table>/<run>/<variant>, got '" + spec + "'");
  }
  dan::CalibKey key;
  key.table = unesc(spec.substr(0, p1));
  const std::string run_str = spec.substr(p1 + 1, p2 - p1 - 1);
  if (run_str.empty() || run_str.find_first_not_of("0123456789") != std::string::npos) {
    throw CLI::ValidationError("--key", "run must be a decimal number in '" + spec + "'");
  }
  key.run = std::stoull(run_str);
  key.variant = unesc(spec.substr(p2 + 1));
  return key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"danserv - middle-tier calibration data server"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "run a server from a config file");
  std::string config_path;
  serve->add_option("--config", config_path, "server config JSON")->required();

  // get
  auto* get = app.add_subcommand("get", "fetch one object");
  std::string addr, table, variant, out_path;
  uint64_t run = 0;
  bool print_rows = false;
  get->add_option("--addr", addr, "server host:port")->required();
  get->add_option("--table", table)->required();
  get->add_option("--run", run)->required();
  get->add_option("--variant", variant);
  get->add_option("--out", out_path, "write the raw encoded object here");
  get->add_flag("--print-rows", print_rows, "dump decoded rows to stdout");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic run set");
  std::string root;
  uint64_t rows_n = 0, seed = 0;
  gen->add_option("--root", root, "backend root directory")->required();
  gen->add_option("--table", table)->required();
  gen->add_option("--run", run)->required();
  gen->add_option("--variant", variant);
  gen->add_option("--rows", rows_n)->required();
  gen->add_option("--seed", seed);

  // bench
  auto* bench = app.add_subcommand("bench", "concurrent load driver");
  uint32_t clients = 1, requests = 1;
  std::vector<std::string> key_specs;
  bool json_only = false;
  bench->add_option("--addr", addr)->required();
  bench->add_option("--clients", clients);
  bench->add_option("--requests", requests, "requests per client");
  bench->add_option("--key", key_specs, "key as <table>/<run>/<variant>; repeatable")
      ->required();
  bench->add_flag("--json", json_only, "print only the JSON report");

  // stats
  auto* stats = app.add_subcommand("stats", "print a statistics snapshot");
  stats->add_option("--addr", addr)->required();

  // subscribe
  auto* subscribe = app.add_subcommand("subscribe", "stream events as XML lines");
  std::string min_sev = "INFO";
  subscribe->add_option("--addr", addr)->required();
  subscribe->add_option("--min-severity", min_sev, "E|I|D or ERROR|INFO|DEBUG");

  // set-config
  auto* setcfg = app.add_subcommand("set-config", "change a parameter on a live server");
  std::string param, value;
  setcfg->add_option("--addr", addr)->required();
  setcfg->add_option("--param", param)->required();
  setcfg->add_option("--value", value)->required();

  // schemagen
  auto* schemagen = app.add_subcommand("schemagen", "generate interfaces from a schema");
  std::string schema_path, out_dir;
  schemagen->add_option("schema", schema_path, "schema JSON file")->required();
  schemagen->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (serve->parsed()) return cmd_serve(config_path);

    if (get->parsed()) {
      return cmd_get(addr, dan::CalibKey{table, run, variant}, out_path, print_rows);
    }

    if (gen->parsed()) {
      const auto path = dan::gen_dataset(root, table, run, variant, rows_n, seed);
      const auto size = std::filesystem::file_size(path);
      std::printf("%s\n", json{{"path", path.string()}, {"rows", rows_n}, {"bytes", size}}
                              .dump()
                              .c_str());
      return 0;
    }

    if (bench->parsed()) {
      dan::BenchOptions opt;
      opt.addr = addr;
      opt.clients = clients;
      opt.requests_per_client = requests;
      for (const auto& spec : key_specs) opt.keys.push_back(parse_key_spec(spec));
      const auto report = dan::run_bench(opt);
      std::printf("%s\n", dan::bench_report_to_json(report).dump(2).c_str());
      if (!json_only) std::printf("\n%s", dan::bench_report_table(report).c_str());
      return report.failures == 0 ? 0 : 1;
    }

    if (stats->parsed()) {
      dan::Client client(addr);
      std::printf("%s\n", client.stats().dump(2).c_str());
      return 0;
    }

    if (subscribe->parsed()) {
      const auto sev = dan::parse_severity(min_sev);
      if (!sev) {
        std::fprintf(stderr, "error: bad severity '%s'\n", min_sev.c_str());
        return 2;
      }
      dan::Client client(addr);
      client.subscribe(*sev);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_stop) {
        if (auto xml = client.next_event(250)) {
          std::printf("%s\n", xml->c_str());
          std::fflush(stdout);
        }
      }
      return 0;
    }

    if (setcfg->parsed()) {
      dan::Client client(addr);
      json value_json;
      if (!value.empty() && value.find_first_not_of("0123456789") == std::string::npos) {
        value_json = std::stoull(value);
      } else {
        value_json = value;
      }
      std::printf("%s\n", client.set_config(param, value_json).dump().c_str());
      return 0;
    }

    if (schemagen->parsed()) {
      std::ifstream in(schema_path, std::ios::binary);
      if (!in) {
        std::fprintf(stderr, "error: cannot open %s\n", schema_path.c_str());
        return 1;
      }
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      for (const auto& p : dan::generate_schema_outputs(text, out_dir)) {
        std::printf("%s\n", p.string().c_str());
      }
      return 0;
    }
  } catch (const dan::DanError& e) {
    std::fprintf(stderr, "error: %s: %s\n", dan::err_name(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
