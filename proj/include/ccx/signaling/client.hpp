#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccx/core/clock.hpp"
#include "ccx/core/error.hpp"
#include "ccx/signaling/offset.hpp"
#include "ccx/signaling/record.hpp"

namespace ccx {

class AllServersUnreachable : public Error {
 public:
  AllServersUnreachable() : Error("all signaling servers are unreachable") {}
};

class PeerNotFound : public Error {
 public:
  explicit PeerNotFound(CoreId core) : Error("no fresh registration for core " + std::to_string(core.value)) {}
};

/// Redundant signaling servers, in query order.
struct ServerSet {
  std::vector<std::string> servers;
};

struct ServerOutcome {
  std::string server;
  bool ok = false;
  std::string error;
};

/// Client-side fan-out over a ServerSet. Each server gets its own timeout;
/// an operation succeeds when at least one server answers.
class SignalingClient {
 public:
  explicit SignalingClient(ServerSet set, std::chrono::milliseconds timeout = std::chrono::milliseconds(1000),
                           std::shared_ptr<Clock> clock = default_clock());

  const ServerSet& servers() const { return set_; }

  /// Stores the record on every reachable server. Throws AllServersUnreachable.
  std::vector<ServerOutcome> register_block(const RegistrationRecord& record);
  std::vector<ServerOutcome> refresh(const RegistrationRecord& record);
  /// Best effort; never throws.
  std::vector<ServerOutcome> deregister(CoreId core);

  /// Newest fresh record across all reachable servers (ties: earlier server).
  /// Throws PeerNotFound, or AllServersUnreachable when no server answers.
  RegistrationRecord discover(CoreId core);
  /// Merged fresh records, deduplicated by newest registration.
  std::vector<RegistrationRecord> list();

  /// NTP-style estimate against one server. Throws Unreachable.
  ClockOffset estimate_offset(std::size_t server_index, int exchanges = kOffsetExchanges);

 private:
  std::vector<ServerOutcome> fan_out(const nlohmann::json& request, bool throw_if_none);

  ServerSet set_;
  std::chrono::milliseconds timeout_;
  std::shared_ptr<Clock> clock_;
};

/// Fresh peers (other than self) whose advertised position lies within
/// radius_m of self's position. Empty, with a warning, when self has no position.
std::vector<CoreId> auto_connect_by_distance(const std::vector<RegistrationRecord>& records,
                                             const RegistrationRecord& self, double radius_m);
std::vector<CoreId> auto_connect_by_distance(SignalingClient& client, const RegistrationRecord& self,
                                             double radius_m);

}  // namespace ccx
