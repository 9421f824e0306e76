#pragma once

#include <atomic>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "ccx/core/clock.hpp"
#include "ccx/signaling/protocol.hpp"
#include "ccx/signaling/record.hpp"
#include "ccx/transport/channel.hpp"
#include "ccx/transport/net.hpp"

namespace ccx {

struct SignalingServerOptions {
  std::string bind = "127.0.0.1:0";
  /// Browser endpoint (WebSocket, same documents); disabled when empty.
  std::string ws_bind;
  /// Overrides the ttl_s of incoming records when set.
  std::optional<std::uint32_t> ttl_s;
  std::shared_ptr<Clock> clock = default_clock();
  /// Transport used to reach cores for relay_subscribe and command_inject.
  std::shared_ptr<DataChannel> channel;
  std::chrono::milliseconds core_timeout{1000};
};

/// In-memory discovery registry. Documents are JSON objects with an "op" field:
/// register, refresh, deregister, list, query, offset_probe, relay_subscribe,
/// relay_unsubscribe, command_inject, stats. Replies carry "ok" and echo "id".
class SignalingServer {
 public:
  explicit SignalingServer(SignalingServerOptions options);
  ~SignalingServer();
  SignalingServer(const SignalingServer&) = delete;
  SignalingServer& operator=(const SignalingServer&) = delete;

  std::string address() const { return listener_.address().str(); }
  std::optional<std::string> ws_address() const;

  /// Handles one request document outside of any connection (relay ops excluded).
  nlohmann::json handle(const nlohmann::json& request);

  std::size_t registrations_received() const { return registrations_.load(); }
  std::uint64_t relayed_frames(const StreamKey& key) const;
  std::vector<RegistrationRecord> fresh_records() const;

  void stop();

 private:
  struct Relay;
  struct Session;

  void accept_loop(net::TcpListener& listener, bool websocket);
  void serve(Session& session);
  nlohmann::json handle_in_session(Session& session, const nlohmann::json& request);
  nlohmann::json relay_subscribe(Session& session, const nlohmann::json& request);
  nlohmann::json relay_unsubscribe(Session& session, const nlohmann::json& request);
  nlohmann::json command_inject(const nlohmann::json& request);
  std::optional<RegistrationRecord> lookup(CoreId core) const;
  void reap_finished();

  SignalingServerOptions options_;
  net::TcpListener listener_;
  std::unique_ptr<net::TcpListener> ws_listener_;

  mutable std::mutex registry_mutex_;
  std::map<std::uint64_t, RegistrationRecord> registry_;
  std::atomic<std::size_t> registrations_{0};

  mutable std::mutex metrics_mutex_;
  std::map<StreamKey, std::uint64_t> relay_counts_;

  std::mutex sessions_mutex_;
  std::list<std::unique_ptr<Session>> sessions_;
  std::atomic_bool stopping_{false};
  std::thread accept_thread_;
  std::thread ws_accept_thread_;
};

}  // namespace ccx
