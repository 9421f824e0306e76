#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "ccx/core/error.hpp"
#include "ccx/transport/wire.hpp"

namespace ccx {

class PeerUnreachable : public Error {
 public:
  explicit PeerUnreachable(const std::string& what) : Error("peer unreachable: " + what) {}
};

class ConnectionClosed : public Error {
 public:
  ConnectionClosed() : Error("connection closed") {}
};

/// Reliable, ordered, frame-delimited connection. send() and receive() may run
/// concurrently from two different contexts.
class Connection {
 public:
  virtual ~Connection() = default;
  /// Throws ConnectionClosed once either side has closed.
  virtual void send(const WireFrame& frame) = 0;
  /// Blocks for the next frame; nullopt once the connection is closed.
  /// Throws MalformedFrame if the peer sent bytes that do not decode.
  virtual std::optional<WireFrame> receive() = 0;
  /// Idempotent; unblocks a pending receive() on both ends.
  virtual void close() = 0;
  virtual std::string peer() const = 0;
};

class Listener {
 public:
  virtual ~Listener() = default;
  /// Blocks for the next incoming connection; nullptr once closed.
  virtual std::unique_ptr<Connection> accept() = 0;
  /// Address peers use to reach this listener.
  virtual std::string address() const = 0;
  virtual void close() = 0;
};

/// Protocol-agnostic transport between cores.
class DataChannel {
 public:
  virtual ~DataChannel() = default;
  /// Throws PeerUnreachable.
  virtual std::unique_ptr<Connection> connect(const std::string& address) = 0;
  virtual std::unique_ptr<Listener> listen(const std::string& bind_address) = 0;
  virtual std::string name() const = 0;
};

}  // namespace ccx

namespace ccx {

/// receive() bounded by `timeout`; on expiry the connection is closed and
/// nullopt returned.
std::optional<WireFrame> receive_for(Connection& connection, std::chrono::milliseconds timeout);

}  // namespace ccx
