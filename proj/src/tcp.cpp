// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/tcp.hpp"

#include <arpa/inet.h>
#include <errno.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <string.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>

#include "dan/errors.hpp"

namespace dan {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw DanError(Err::Io, what + ": " + strerror(errno));
}

void resolve(const std::string& host, uint16_t port, sockaddr_in* out) {
  memset(out, 0, sizeof(*out));
  out->sin_family = AF_INET;
  out->sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &out->sin_addr) == 1) return;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw DanError(Err::Io, "cannot resolve host " + host);
  }
  out->sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
}

void wait_fd(int fd, short events, int timeout_ms, const char* what) {
  pollfd pfd{fd, events, 0};
  for (;;) {
    const int rc = poll(&pfd, 1, timeout_ms);
    if (rc > 0) return;
    if (rc == 0) throw DanError(Err::Timeout, std::string(what) + " timed out");
    if (errno != EINTR) throw_errno(what);
  }
}

}  // namespace

std::pair<std::string, uint16_t> split_addr(const std::string& addr) {
  const auto pos = addr.rfind(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == addr.size()) {
    throw DanError(Err::Malformed, "address must be host:port, got '" + addr + "'");
  }
  const std::string host = addr.substr(0, pos);
  char* end = nullptr;
  const unsigned long port = strtoul(addr.c_str() + pos + 1, &end, 10);
  if (*end != '\0' || port > 65535) {
    throw DanError(Err::Malformed, "bad port in '" + addr + "'");
  }
  return {host, static_cast<uint16_t>(port)};
}

TcpConn& TcpConn::operator=(TcpConn&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TcpConn::~TcpConn() { close(); }

TcpConn TcpConn::connect_to(const std::string& host, uint16_t port, int timeout_ms) {
  sockaddr_in addr;
  resolve(host, port, &addr);
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw_errno("socket");
  TcpConn conn(fd);

  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  const int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (rc != 0) {
    if (errno != EINPROGRESS) throw_errno("connect " + host + ":" + std::to_string(port));
    try {
      wait_fd(fd, POLLOUT, timeout_ms, "connect");
    } catch (const DanError& e) {
      if (e.kind() == Err::Timeout) throw;
      throw DanError(Err::Io, std::string("connect: ") + e.what());
    }
    int err = 0;
    socklen_t len = sizeof(err);
    getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      throw DanError(Err::Io, "connect " + host + ":" + std::to_string(port) + ": " +
                                  strerror(err));
    }
  }
  fcntl(fd, F_SETFL, flags);
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return conn;
}

void TcpConn::send_all(std::span<const uint8_t> data) {
  size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    sent += static_cast<size_t>(n);
  }
}

size_t TcpConn::recv_some(uint8_t* buf, size_t n, int timeout_ms) {
  if (timeout_ms >= 0) wait_fd(fd_, POLLIN, timeout_ms, "recv");
  for (;;) {
    const ssize_t r = ::recv(fd_, buf, n, 0);
    if (r >= 0) return static_cast<size_t>(r);
    if (errno != EINTR) throw_errno("recv");
  }
}

void TcpConn::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpConn::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_(other.fd_), host_(std::move(other.host_)), port_(other.port_) {
  other.fd_ = -1;
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    host_ = std::move(other.host_);
    port_ = other.port_;
    other.fd_ = -1;
  }
  return *this;
}

TcpListener::~TcpListener() { close(); }

TcpListener TcpListener::listen_on(const std::string& host, uint16_t port) {
  sockaddr_in addr;
  resolve(host, port, &addr);
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw_errno("socket");
  TcpListener l;
  l.fd_ = fd;
  l.host_ = host;
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw_errno("bind " + host + ":" + std::to_string(port));
  }
  if (listen(fd, SOMAXCONN) != 0) throw_errno("listen");
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  l.port_ = ntohs(bound.sin_port);
  return l;
}

TcpConn TcpListener::accept_conn() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return TcpConn(fd);
    }
    if (errno != EINTR) throw_errno("accept");
  }
}

std::string TcpListener::bound_addr() const {
  return host_ + ":" + std::to_string(port_);
}

void TcpListener::close() {
  if (fd_ >= 0) {
    // shutdown unblocks a thread parked in accept()
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace dan
