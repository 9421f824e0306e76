#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ccx/transport/net.hpp"

namespace ccx {

/// Bidirectional stream of key-value (JSON) documents.
class DocStream {
 public:
  virtual ~DocStream() = default;
  /// nullopt on orderly close. Throws ccx::Error on a malformed document.
  virtual std::optional<nlohmann::json> read() = 0;
  /// Thread-safe. Throws net::NetError when the peer is gone.
  virtual void write(const nlohmann::json& doc) = 0;
  virtual void close() = 0;
};

inline constexpr std::size_t kMaxDocumentSize = 16u * 1024u * 1024u;

/// u32 big-endian length | UTF-8 JSON text, over a stream socket.
class FramedDocStream final : public DocStream {
 public:
  explicit FramedDocStream(net::Socket socket) : socket_(std::move(socket)) {}

  std::optional<nlohmann::json> read() override;
  void write(const nlohmann::json& doc) override;
  void close() override { socket_.shutdown(); }
  net::Socket& socket() { return socket_; }

 private:
  net::Socket socket_;
  std::mutex write_mutex_;
};

/// Server side of an RFC 6455 WebSocket carrying one JSON document per text message.
class WebSocketDocStream final : public DocStream {
 public:
  /// Performs the HTTP upgrade handshake; throws ccx::Error when it is not a
  /// valid WebSocket request.
  explicit WebSocketDocStream(net::Socket socket);

  std::optional<nlohmann::json> read() override;
  void write(const nlohmann::json& doc) override;
  void close() override { socket_.shutdown(); }

 private:
  void send_frame(std::uint8_t opcode, const std::string& payload);

  net::Socket socket_;
  std::mutex write_mutex_;
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept_key(const std::string& client_key);
std::string base64_encode(ByteView bytes);
Bytes base64_decode(const std::string& text);

/// One request/response exchange on a fresh connection.
nlohmann::json signaling_request(const std::string& server, const nlohmann::json& request,
                                 std::chrono::milliseconds timeout);

}  // namespace ccx
