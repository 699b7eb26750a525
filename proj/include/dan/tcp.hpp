// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

namespace dan {

// "host:port" -> (host, port). Throws Malformed.
std::pair<std::string, uint16_t> split_addr(const std::string& addr);

// Thin RAII wrappers over blocking IPv4 sockets. Errors throw DanError:
// Io for connect/send/recv failures, Timeout when a deadline passes.
class TcpConn {
 public:
  TcpConn() = default;
  explicit TcpConn(int fd) : fd_(fd) {}
  TcpConn(TcpConn&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  TcpConn& operator=(TcpConn&& other) noexcept;
  TcpConn(const TcpConn&) = delete;
  TcpConn& operator=(const TcpConn&) = delete;
  ~TcpConn();

  static TcpConn connect_to(const std::string& host, uint16_t port, int timeout_ms);

  void send_all(std::span<const uint8_t> data);
  // Returns 0 on orderly EOF; timeout_ms < 0 blocks indefinitely.
  size_t recv_some(uint8_t* buf, size_t n, int timeout_ms = -1);

  void shutdown_both();
  void close();
  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener();

  // port 0 binds an ephemeral port; see bound_port().
  static TcpListener listen_on(const std::string& host, uint16_t port);

  TcpConn accept_conn();  // throws Io once closed
  uint16_t bound_port() const { return port_; }
  std::string bound_addr() const;
  void close();
  bool valid() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  std::string host_;
  uint16_t port_ = 0;
};

}  // namespace dan
