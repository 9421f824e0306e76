#pragma once

#include <chrono>

#include "ccx/transport/channel.hpp"

namespace ccx {

/// TCP stream-socket transport; addresses are "host:port".
class SocketChannel final : public DataChannel {
 public:
  explicit SocketChannel(std::chrono::milliseconds connect_timeout = std::chrono::milliseconds(1000))
      : connect_timeout_(connect_timeout) {}

  std::unique_ptr<Connection> connect(const std::string& address) override;
  std::unique_ptr<Listener> listen(const std::string& bind_address) override;
  std::string name() const override { return "socket"; }

 private:
  std::chrono::milliseconds connect_timeout_;
};

}  // namespace ccx
