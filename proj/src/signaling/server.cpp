#include "ccx/signaling/server.hpp"

#include <sys/socket.h>

#include <spdlog/spdlog.h>

#include "ccx/transport/socket_channel.hpp"

namespace ccx {

struct SignalingServer::Relay {
  std::unique_ptr<Connection> connection;
  std::thread thread;
};

struct SignalingServer::Session {
  std::unique_ptr<DocStream> stream;
  net::Socket raw;  // held until the doc stream is built
  int fd = -1;
  bool websocket = false;
  std::thread thread;
  std::atomic_bool done{false};
  std::mutex relays_mutex;
  std::map<StreamKey, std::unique_ptr<Relay>> relays;
};

namespace {

nlohmann::json fail(const std::string& error) { return {{"ok", false}, {"error", error}}; }

}  // namespace

SignalingServer::SignalingServer(SignalingServerOptions options)
    : options_(std::move(options)), listener_(net::parse_host_port(options_.bind)) {
  if (!options_.channel) options_.channel = std::make_shared<SocketChannel>(options_.core_timeout);
  if (!options_.ws_bind.empty()) {
    ws_listener_ = std::make_unique<net::TcpListener>(net::parse_host_port(options_.ws_bind));
    ws_accept_thread_ = std::thread([this] { accept_loop(*ws_listener_, true); });
  }
  accept_thread_ = std::thread([this] { accept_loop(listener_, false); });
}

SignalingServer::~SignalingServer() { stop(); }

std::optional<std::string> SignalingServer::ws_address() const {
  if (!ws_listener_) return std::nullopt;
  return ws_listener_->address().str();
}

void SignalingServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (ws_listener_) ws_listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (ws_accept_thread_.joinable()) ws_accept_thread_.join();
  std::list<std::unique_ptr<Session>> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions.swap(sessions_);
  }
  for (auto& s : sessions) ::shutdown(s->fd, SHUT_RDWR);
  for (auto& s : sessions) {
    if (s->thread.joinable()) s->thread.join();
  }
}

void SignalingServer::accept_loop(net::TcpListener& listener, bool websocket) {
  while (!stopping_.load()) {
    auto socket = listener.accept();
    if (!socket) break;
    reap_finished();
    auto session = std::make_unique<Session>();
    session->fd = socket->fd();
    session->raw = std::move(*socket);
    session->websocket = websocket;
    auto* raw = session.get();
    std::lock_guard lock(sessions_mutex_);
    if (stopping_.load()) break;
    raw->thread = std::thread([this, raw] {
      serve(*raw);
      raw->done.store(true);
    });
    sessions_.push_back(std::move(session));
  }
}

void SignalingServer::reap_finished() {
  std::list<std::unique_ptr<Session>> finished;
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if ((*it)->done.load()) {
        finished.push_back(std::move(*it));
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : finished) s->thread.join();
}

void SignalingServer::serve(Session& session) {
  try {
    if (session.websocket) {
      session.stream = std::make_unique<WebSocketDocStream>(std::move(session.raw));
    } else {
      session.stream = std::make_unique<FramedDocStream>(std::move(session.raw));
    }
    while (auto request = session.stream->read()) {
      auto reply = handle_in_session(session, *request);
      if (request->contains("id")) reply["id"] = (*request)["id"];
      session.stream->write(reply);
    }
  } catch (const std::exception& e) {
    spdlog::debug("signaling session ended: {}", e.what());
  }
  std::map<StreamKey, std::unique_ptr<Relay>> relays;
  {
    std::lock_guard lock(session.relays_mutex);
    relays.swap(session.relays);
  }
  for (auto& [_, relay] : relays) relay->connection->close();
  for (auto& [_, relay] : relays) relay->thread.join();
}

nlohmann::json SignalingServer::handle_in_session(Session& session, const nlohmann::json& request) {
  auto op = request.value("op", "");
  if (op == "relay_subscribe") return relay_subscribe(session, request);
  if (op == "relay_unsubscribe") return relay_unsubscribe(session, request);
  return handle(request);
}

std::optional<RegistrationRecord> SignalingServer::lookup(CoreId core) const {
  auto now = options_.clock->now();
  std::lock_guard lock(registry_mutex_);
  auto it = registry_.find(core.value);
  if (it == registry_.end() || !it->second.fresh_at(now)) return std::nullopt;
  return it->second;
}

std::vector<RegistrationRecord> SignalingServer::fresh_records() const {
  auto now = options_.clock->now();
  std::lock_guard lock(registry_mutex_);
  std::vector<RegistrationRecord> out;
  for (const auto& [_, r] : registry_) {
    if (r.fresh_at(now)) out.push_back(r);
  }
  return out;
}

std::uint64_t SignalingServer::relayed_frames(const StreamKey& key) const {
  std::lock_guard lock(metrics_mutex_);
  auto it = relay_counts_.find(key);
  return it == relay_counts_.end() ? 0 : it->second;
}

nlohmann::json SignalingServer::handle(const nlohmann::json& request) {
  auto op = request.value("op", "");
  try {
    if (op == "register" || op == "refresh") {
      auto record = record_from_json(request.at("record"));
      auto t1 = options_.clock->now();
      record.registered_at_server_time = t1;
      if (options_.ttl_s) record.ttl_s = *options_.ttl_s;
      bool known = false;
      {
        std::lock_guard lock(registry_mutex_);
        auto it = registry_.find(record.core.value);
        known = it != registry_.end() && it->second.fresh_at(t1);
        registry_[record.core.value] = record;
      }
      registrations_.fetch_add(1);
      return {{"ok", true}, {"registered_at", t1.millis}, {"was_known", known}, {"ttl_s", record.ttl_s}};
    }
    if (op == "deregister") {
      std::lock_guard lock(registry_mutex_);
      registry_.erase(request.at("core").get<std::uint64_t>());
      return {{"ok", true}};
    }
    if (op == "list") {
      nlohmann::json records = nlohmann::json::array();
      for (const auto& r : fresh_records()) records.push_back(to_json(r));
      return {{"ok", true}, {"records", records}};
    }
    if (op == "query") {
      auto record = lookup(CoreId{request.at("core").get<std::uint64_t>()});
      if (!record) return fail("not_found");
      return {{"ok", true}, {"record", to_json(*record)}};
    }
    if (op == "offset_probe") {
      auto t1 = options_.clock->now();
      auto t0 = request.value("t0", std::uint64_t{0});
      return {{"ok", true}, {"t0", t0}, {"t1", t1.millis}, {"t2", options_.clock->now().millis}};
    }
    if (op == "command_inject") return command_inject(request);
    if (op == "stats") {
      nlohmann::json relays = nlohmann::json::object();
      {
        std::lock_guard lock(metrics_mutex_);
        for (const auto& [k, n] : relay_counts_) relays[to_string(k)] = n;
      }
      return {{"ok", true}, {"registrations", registrations_.load()}, {"relayed_frames", relays}};
    }
    if (op == "relay_subscribe" || op == "relay_unsubscribe") return fail("requires a session");
  } catch (const std::exception& e) {
    return fail(std::string("bad_request: ") + e.what());
  }
  return fail("unknown_op");
}

nlohmann::json SignalingServer::relay_subscribe(Session& session, const nlohmann::json& request) {
  StreamKey key{CoreId{request.value("core", std::uint64_t{0})}, FilterId{request.value("filter", 0u)}};
  auto record = lookup(key.core);
  if (!record) return fail("TargetOffline");
  std::lock_guard lock(session.relays_mutex);
  if (session.relays.contains(key)) return {{"ok", true}, {"already", true}};
  std::unique_ptr<Connection> conn;
  try {
    conn = options_.channel->connect(record->address);
    conn->send(make_subscribe_frame(MsgType::Subscribe, CoreId{}, key));
  } catch (const Error& e) {
    return fail("TargetOffline");
  }
  auto relay = std::make_unique<Relay>();
  relay->connection = std::move(conn);
  auto* raw = relay.get();
  auto* stream = session.stream.get();
  relay->thread = std::thread([this, raw, stream, key] {
    try {
      while (auto frame = raw->connection->receive()) {
        if (frame->msg_type != MsgType::Data || frame->key() != key) continue;
        auto bytes = encode_frame(*frame);
        stream->write({{"op", "frame"},
                       {"core", frame->core.value},
                       {"filter", frame->filter.value},
                       {"t", frame->t.millis},
                       {"kind", frame->payload_kind},
                       {"frame", base64_encode(bytes)}});
        std::lock_guard lock(metrics_mutex_);
        ++relay_counts_[key];
      }
    } catch (const std::exception& e) {
      spdlog::debug("relay for {} ended: {}", to_string(key), e.what());
    }
    raw->connection->close();
  });
  session.relays.emplace(key, std::move(relay));
  return {{"ok", true}};
}

nlohmann::json SignalingServer::relay_unsubscribe(Session& session, const nlohmann::json& request) {
  StreamKey key{CoreId{request.value("core", std::uint64_t{0})}, FilterId{request.value("filter", 0u)}};
  std::unique_ptr<Relay> relay;
  {
    std::lock_guard lock(session.relays_mutex);
    auto it = session.relays.find(key);
    if (it == session.relays.end()) return fail("not_subscribed");
    relay = std::move(it->second);
    session.relays.erase(it);
  }
  relay->connection->close();
  relay->thread.join();
  return {{"ok", true}};
}

nlohmann::json SignalingServer::command_inject(const nlohmann::json& request) {
  StreamKey key{CoreId{request.at("core").get<std::uint64_t>()}, FilterId{request.at("filter").get<std::uint32_t>()}};
  Command command;
  auto body = request.value("body", nlohmann::json::object());
  if (!body.is_object()) return fail("ValidationFailed");
  for (const auto& [k, v] : body.items()) {
    command.fields[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  auto record = lookup(key.core);
  if (!record) return fail("TargetOffline");
  try {
    auto conn = options_.channel->connect(record->address);
    conn->send(make_data_frame(StreamFrame{key, Timestamp{0}, encode(command)}));
    auto reply = receive_for(*conn, options_.core_timeout);
    conn->close();
    if (!reply) return fail("TargetOffline");
    if (reply->msg_type == MsgType::Data) return {{"ok", true}, {"t", reply->t.millis}};
    nlohmann::json out = fail("Rejected");
    if (reply->payload_kind == static_cast<std::uint16_t>(PayloadKind::Command)) {
      auto doc = decode_command(Payload{PayloadKind::Command, reply->payload});
      for (const auto& [k, v] : doc.fields) out[k] = v;
    }
    return out;
  } catch (const Error&) {
    return fail("TargetOffline");
  }
}

}  // namespace ccx
