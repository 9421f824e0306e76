#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "ccx/transport/channel.hpp"

namespace ccx {

/// In-process transport. Listeners are named; connections carry encoded frame
/// bytes through a pair of queues so delivery is byte-exact like a socket.
class LoopbackChannel final : public DataChannel {
 public:
  LoopbackChannel();
  ~LoopbackChannel() override;

  std::unique_ptr<Connection> connect(const std::string& address) override;
  /// An empty name or one ending in ":0" picks a fresh unique name.
  std::unique_ptr<Listener> listen(const std::string& bind_address) override;
  std::string name() const override { return "loopback"; }

  struct Registry;

 private:
  std::shared_ptr<Registry> registry_;
};

}  // namespace ccx
