#include "ccx/signaling/protocol.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>

#include "ccx/core/error.hpp"

namespace ccx {

std::optional<nlohmann::json> FramedDocStream::read() {
  std::uint8_t header[4];
  if (!socket_.recv_exact(header, 4)) return std::nullopt;
  std::uint32_t len = ByteReader(ByteView(header, 4)).u32();
  if (len > kMaxDocumentSize) throw Error("signaling document too large");
  std::string text(len, '\0');
  if (len > 0 && !socket_.recv_exact(reinterpret_cast<std::uint8_t*>(text.data()), len)) return std::nullopt;
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error("signaling document is not a JSON object");
  return doc;
}

void FramedDocStream::write(const nlohmann::json& doc) {
  auto text = doc.dump();
  Bytes out;
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.raw(text);
  std::lock_guard lock(write_mutex_);
  socket_.send_all(out);
}

std::string base64_encode(ByteView bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error("base64 length is not a multiple of 4");
  Bytes out(text.size() / 4 * 3);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw Error("invalid base64");
  // EVP_DecodeBlock keeps the padding bytes; drop them.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string websocket_accept_key(const std::string& client_key) {
  std::string material = client_key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(material.data()), material.size(), digest);
  return base64_encode(ByteView(digest, SHA_DIGEST_LENGTH));
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

WebSocketDocStream::WebSocketDocStream(net::Socket socket) : socket_(std::move(socket)) {
  std::string request;
  std::uint8_t c;
  while (request.find("\r\n\r\n") == std::string::npos) {
    if (request.size() > 16384 || !socket_.recv_exact(&c, 1)) throw Error("incomplete WebSocket handshake");
    request.push_back(static_cast<char>(c));
  }
  std::string key;
  std::size_t pos = 0;
  while ((pos = request.find("\r\n", pos)) != std::string::npos) {
    pos += 2;
    auto end = request.find("\r\n", pos);
    if (end == std::string::npos) break;
    auto line = request.substr(pos, end - pos);
    auto colon = line.find(':');
    if (colon != std::string::npos && lower(trim(line.substr(0, colon))) == "sec-websocket-key") {
      key = trim(line.substr(colon + 1));
    }
  }
  if (key.empty()) throw Error("WebSocket handshake without Sec-WebSocket-Key");
  std::string response =
      "HTTP/1.1 101 Switching Protocols\r\n"
      "Upgrade: websocket\r\n"
      "Connection: Upgrade\r\n"
      "Sec-WebSocket-Accept: " +
      websocket_accept_key(key) + "\r\n\r\n";
  socket_.send_all(ByteView(reinterpret_cast<const std::uint8_t*>(response.data()), response.size()));
}

std::optional<nlohmann::json> WebSocketDocStream::read() {
  std::string message;
  for (;;) {
    std::uint8_t head[2];
    if (!socket_.recv_exact(head, 2)) return std::nullopt;
    bool fin = head[0] & 0x80;
    std::uint8_t opcode = head[0] & 0x0F;
    bool masked = head[1] & 0x80;
    std::uint64_t len = head[1] & 0x7F;
    if (len == 126) {
      std::uint8_t ext[2];
      if (!socket_.recv_exact(ext, 2)) return std::nullopt;
      len = ByteReader(ByteView(ext, 2)).u16();
    } else if (len == 127) {
      std::uint8_t ext[8];
      if (!socket_.recv_exact(ext, 8)) return std::nullopt;
      len = ByteReader(ByteView(ext, 8)).u64();
    }
    if (len > kMaxDocumentSize) throw Error("WebSocket message too large");
    std::uint8_t mask[4] = {0, 0, 0, 0};
    if (masked && !socket_.recv_exact(mask, 4)) return std::nullopt;
    std::string payload(len, '\0');
    if (len > 0 && !socket_.recv_exact(reinterpret_cast<std::uint8_t*>(payload.data()), len)) return std::nullopt;
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ mask[i % 4]);

    if (opcode == 0x8) {
      std::lock_guard lock(write_mutex_);
      try {
        send_frame(0x8, "");
      } catch (const net::NetError&) {
      }
      return std::nullopt;
    }
    if (opcode == 0x9) {
      std::lock_guard lock(write_mutex_);
      send_frame(0xA, payload);
      continue;
    }
    if (opcode == 0xA) continue;
    message += payload;
    if (!fin) continue;
    auto doc = nlohmann::json::parse(message, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error("WebSocket message is not a JSON object");
    return doc;
  }
}

void WebSocketDocStream::send_frame(std::uint8_t opcode, const std::string& payload) {
  Bytes out;
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(0x80 | opcode));
  if (payload.size() < 126) {
    w.u8(static_cast<std::uint8_t>(payload.size()));
  } else if (payload.size() <= 0xFFFF) {
    w.u8(126);
    w.u16(static_cast<std::uint16_t>(payload.size()));
  } else {
    w.u8(127);
    w.u64(payload.size());
  }
  w.raw(payload);
  socket_.send_all(out);
}

void WebSocketDocStream::write(const nlohmann::json& doc) {
  std::lock_guard lock(write_mutex_);
  send_frame(0x1, doc.dump());
}

nlohmann::json signaling_request(const std::string& server, const nlohmann::json& request,
                                 std::chrono::milliseconds timeout) {
  auto socket = net::tcp_connect(net::parse_host_port(server), timeout);
  socket.set_timeouts(timeout);
  FramedDocStream stream(std::move(socket));
  stream.write(request);
  auto reply = stream.read();
  if (!reply) throw net::NetError("signaling server " + server + " closed the connection");
  return *reply;
}

}  // namespace ccx
