#include "ccx/signaling/client.hpp"

#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "ccx/signaling/protocol.hpp"

namespace ccx {

SignalingClient::SignalingClient(ServerSet set, std::chrono::milliseconds timeout, std::shared_ptr<Clock> clock)
    : set_(std::move(set)), timeout_(timeout), clock_(std::move(clock)) {}

std::vector<ServerOutcome> SignalingClient::fan_out(const nlohmann::json& request, bool throw_if_none) {
  std::vector<ServerOutcome> outcomes;
  bool any = false;
  for (const auto& server : set_.servers) {
    ServerOutcome outcome{server, false, {}};
    try {
      auto reply = signaling_request(server, request, timeout_);
      outcome.ok = reply.value("ok", false);
      if (!outcome.ok) outcome.error = reply.value("error", "rejected");
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    any = any || outcome.ok;
    outcomes.push_back(std::move(outcome));
  }
  if (throw_if_none && !any) throw AllServersUnreachable();
  return outcomes;
}

std::vector<ServerOutcome> SignalingClient::register_block(const RegistrationRecord& record) {
  auto copy = record;
  copy.client_clock = clock_->now();
  return fan_out({{"op", "register"}, {"record", to_json(copy)}}, true);
}

std::vector<ServerOutcome> SignalingClient::refresh(const RegistrationRecord& record) {
  auto copy = record;
  copy.client_clock = clock_->now();
  return fan_out({{"op", "refresh"}, {"record", to_json(copy)}}, true);
}

std::vector<ServerOutcome> SignalingClient::deregister(CoreId core) {
  return fan_out({{"op", "deregister"}, {"core", core.value}}, false);
}

RegistrationRecord SignalingClient::discover(CoreId core) {
  std::optional<RegistrationRecord> best;
  bool reached = false;
  for (const auto& server : set_.servers) {
    try {
      auto reply = signaling_request(server, {{"op", "query"}, {"core", core.value}}, timeout_);
      reached = true;
      if (!reply.value("ok", false)) continue;
      auto record = record_from_json(reply.at("record"));
      if (!best || record.registered_at_server_time > best->registered_at_server_time) best = std::move(record);
    } catch (const std::exception& e) {
      spdlog::debug("discover via {} failed: {}", server, e.what());
    }
  }
  if (best) return *best;
  if (!reached) throw AllServersUnreachable();
  throw PeerNotFound(core);
}

std::vector<RegistrationRecord> SignalingClient::list() {
  std::map<std::uint64_t, RegistrationRecord> merged;
  bool reached = false;
  for (const auto& server : set_.servers) {
    try {
      auto reply = signaling_request(server, {{"op", "list"}}, timeout_);
      reached = true;
      for (const auto& j : reply.value("records", nlohmann::json::array())) {
        auto record = record_from_json(j);
        auto it = merged.find(record.core.value);
        if (it == merged.end() || record.registered_at_server_time > it->second.registered_at_server_time) {
          merged[record.core.value] = std::move(record);
        }
      }
    } catch (const std::exception& e) {
      spdlog::debug("list via {} failed: {}", server, e.what());
    }
  }
  if (!reached) throw AllServersUnreachable();
  std::vector<RegistrationRecord> out;
  for (auto& [_, r] : merged) out.push_back(std::move(r));
  return out;
}

ClockOffset SignalingClient::estimate_offset(std::size_t server_index, int exchanges) {
  if (server_index >= set_.servers.size()) throw Unreachable("no server #" + std::to_string(server_index));
  const auto& server = set_.servers[server_index];
  try {
    auto socket = net::tcp_connect(net::parse_host_port(server), timeout_);
    socket.set_timeouts(timeout_);
    FramedDocStream stream(std::move(socket));
    return ccx::estimate_offset(CoreId{}, *clock_,
                                [&](Timestamp t0) {
                                  stream.write({{"op", "offset_probe"}, {"t0", t0.millis}});
                                  auto reply = stream.read();
                                  if (!reply || !reply->value("ok", false)) throw Unreachable(server);
                                  return std::make_pair(Timestamp{reply->at("t1").get<std::uint64_t>()},
                                                        Timestamp{reply->at("t2").get<std::uint64_t>()});
                                },
                                exchanges);
  } catch (const Unreachable&) {
    throw;
  } catch (const std::exception& e) {
    throw Unreachable(server + ": " + e.what());
  }
}

std::vector<CoreId> auto_connect_by_distance(const std::vector<RegistrationRecord>& records,
                                             const RegistrationRecord& self, double radius_m) {
  auto origin = self.position();
  if (!origin) {
    spdlog::warn("core {} advertises no position; auto-connect skipped", self.core.value);
    return {};
  }
  std::vector<CoreId> out;
  for (const auto& r : records) {
    if (r.core == self.core) continue;
    auto p = r.position();
    if (!p) continue;
    if (std::hypot(p->first - origin->first, p->second - origin->second) <= radius_m) out.push_back(r.core);
  }
  return out;
}

std::vector<CoreId> auto_connect_by_distance(SignalingClient& client, const RegistrationRecord& self,
                                             double radius_m) {
  return auto_connect_by_distance(client.list(), self, radius_m);
}

}  // namespace ccx
