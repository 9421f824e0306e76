#include "ccx/transport/socket_channel.hpp"

#include <atomic>
#include <mutex>

#include "ccx/transport/net.hpp"

namespace ccx {

namespace {

class SocketConnection final : public Connection {
 public:
  SocketConnection(net::Socket socket, std::string peer) : socket_(std::move(socket)), peer_(std::move(peer)) {}
  ~SocketConnection() override { close(); }

  void send(const WireFrame& frame) override {
    auto bytes = encode_frame(frame);
    std::lock_guard lock(send_mutex_);
    if (closed_.load()) throw ConnectionClosed();
    try {
      socket_.send_all(bytes);
    } catch (const net::NetError&) {
      closed_.store(true);
      throw ConnectionClosed();
    }
  }

  std::optional<WireFrame> receive() override {
    if (closed_.load()) return std::nullopt;
    Bytes buf(kFrameHeaderSize);
    if (!socket_.recv_exact(buf.data(), buf.size())) return closed();
    std::uint32_t len = decode_header_payload_len(buf);
    buf.resize(kFrameHeaderSize + len);
    if (len > 0 && !socket_.recv_exact(buf.data() + kFrameHeaderSize, len)) return closed();
    return decode_frame(buf);
  }

  void close() override {
    if (!closed_.exchange(true)) socket_.shutdown();
  }

  std::string peer() const override { return peer_; }

 private:
  std::optional<WireFrame> closed() {
    close();
    return std::nullopt;
  }

  net::Socket socket_;
  std::string peer_;
  std::mutex send_mutex_;
  std::atomic_bool closed_{false};
};

class SocketListener final : public Listener {
 public:
  explicit SocketListener(const net::HostPort& bind) : listener_(bind) {}

  std::unique_ptr<Connection> accept() override {
    auto s = listener_.accept();
    if (!s) return nullptr;
    return std::make_unique<SocketConnection>(std::move(*s), "incoming");
  }

  std::string address() const override { return listener_.address().str(); }
  void close() override { listener_.close(); }

 private:
  net::TcpListener listener_;
};

}  // namespace

std::unique_ptr<Connection> SocketChannel::connect(const std::string& address) {
  try {
    auto hp = net::parse_host_port(address);
    return std::make_unique<SocketConnection>(net::tcp_connect(hp, connect_timeout_), address);
  } catch (const net::NetError& e) {
    throw PeerUnreachable(e.what());
  }
}

std::unique_ptr<Listener> SocketChannel::listen(const std::string& bind_address) {
  return std::make_unique<SocketListener>(net::parse_host_port(bind_address));
}

}  // namespace ccx
