#pragma once

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "ccx/core/clock.hpp"
#include "ccx/tam/tam.hpp"
#include "ccx/transport/channel.hpp"

namespace ccx {

struct Subscription {
  CoreId subscriber;
  StreamKey key;
  bool active = false;
};

/// Subscriptions held by one connection.
class SubscriptionTable {
 public:
  /// False when (subscriber, key) is already active.
  bool add(CoreId subscriber, const StreamKey& key);
  bool remove(CoreId subscriber, const StreamKey& key);
  std::vector<Subscription> list() const;
  std::size_t active_count() const;
  void deactivate_all();

 private:
  mutable std::mutex mutex_;
  std::vector<Subscription> entries_;
};

struct PublishOptions {
  /// Stamps PONG replies (remote receive and send time of a probe).
  std::shared_ptr<Clock> clock = default_clock();
  /// Handles DATA frames sent by the peer (command injection). Returns the reply
  /// frame to send back, if any.
  std::function<std::optional<WireFrame>(const WireFrame&)> on_data;
  /// Counts DATA frames sent, for diagnostics; may be null.
  std::atomic<std::uint64_t>* sent_counter = nullptr;
};

/// Serves one peer connection until it closes: answers PING with PONG, applies
/// SUBSCRIBE/UNSUBSCRIBE, and sends every new TAM frame of an active subscription
/// exactly once, in insertion order. On return all subscriptions are inactive.
void publish_loop(Connection& connection, Tam& tam, SubscriptionTable& subscriptions,
                  const PublishOptions& options = {});

/// Accepts connections on a listener and runs publish_loop for each.
class StreamServer {
 public:
  StreamServer(std::unique_ptr<Listener> listener, Tam& tam, PublishOptions options = {});
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  std::string address() const { return address_; }
  std::uint64_t frames_sent() const { return sent_.load(); }
  std::size_t active_subscriptions() const;
  void stop();

 private:
  struct Session {
    std::unique_ptr<Connection> connection;
    SubscriptionTable subscriptions;
    std::thread thread;
    std::atomic_bool done{false};
  };

  void accept_loop();
  void reap_finished();

  std::unique_ptr<Listener> listener_;
  std::string address_;
  Tam& tam_;
  PublishOptions options_;
  std::atomic<std::uint64_t> sent_{0};
  mutable std::mutex sessions_mutex_;
  std::list<std::unique_ptr<Session>> sessions_;
  std::atomic_bool stopping_{false};
  std::thread accept_thread_;
};

}  // namespace ccx
