#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "ccx/core/bytes.hpp"
#include "ccx/core/error.hpp"

namespace ccx::net {

class NetError : public Error {
 public:
  using Error::Error;
};

struct HostPort {
  std::string host;
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port"; throws NetError.
HostPort parse_host_port(const std::string& text);

/// Owning stream-socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }

  /// Throws NetError on failure.
  void send_all(ByteView bytes);
  /// Fills `out` completely; false on orderly EOF before the first byte or on error.
  bool recv_exact(std::uint8_t* out, std::size_t n);
  void set_timeouts(std::chrono::milliseconds timeout);
  /// Unblocks pending calls from other threads without releasing the fd.
  void shutdown();

 private:
  int fd_ = -1;
};

/// Throws NetError when the connection cannot be established within `timeout`.
Socket tcp_connect(const HostPort& address, std::chrono::milliseconds timeout);

class TcpListener {
 public:
  /// Port 0 picks an ephemeral port. Throws NetError.
  explicit TcpListener(const HostPort& bind);
  ~TcpListener();

  /// nullopt once closed.
  std::optional<Socket> accept();
  HostPort address() const { return bound_; }
  void close();

 private:
  Socket socket_;
  HostPort bound_;
  std::atomic_bool closed_{false};
};

}  // namespace ccx::net
