#include "ccx/transport/publisher.hpp"

#include <condition_variable>
#include <deque>
#include <map>

#include <spdlog/spdlog.h>

namespace ccx {

bool SubscriptionTable::add(CoreId subscriber, const StreamKey& key) {
  std::lock_guard lock(mutex_);
  for (auto& s : entries_) {
    if (s.subscriber == subscriber && s.key == key) {
      if (s.active) return false;
      s.active = true;
      return true;
    }
  }
  entries_.push_back(Subscription{subscriber, key, true});
  return true;
}

bool SubscriptionTable::remove(CoreId subscriber, const StreamKey& key) {
  std::lock_guard lock(mutex_);
  for (auto& s : entries_) {
    if (s.subscriber == subscriber && s.key == key && s.active) {
      s.active = false;
      return true;
    }
  }
  return false;
}

std::vector<Subscription> SubscriptionTable::list() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::size_t SubscriptionTable::active_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& s : entries_) n += s.active;
  return n;
}

void SubscriptionTable::deactivate_all() {
  std::lock_guard lock(mutex_);
  for (auto& s : entries_) s.active = false;
}

namespace {

class Outbox {
 public:
  void push(WireFrame f) {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    queue_.push_back(std::move(f));
    cv_.notify_one();
  }

  std::optional<WireFrame> pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    auto f = std::move(queue_.front());
    queue_.pop_front();
    return f;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    queue_.clear();
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<WireFrame> queue_;
  bool closed_ = false;
};

}  // namespace

void publish_loop(Connection& connection, Tam& tam, SubscriptionTable& subscriptions, const PublishOptions& options) {
  auto outbox = std::make_shared<Outbox>();
  std::map<std::pair<CoreId, StreamKey>, Tam::ObserverId> observers;

  std::thread sender([&connection, outbox, counter = options.sent_counter] {
    while (auto f = outbox->pop()) {
      try {
        connection.send(*f);
      } catch (const ConnectionClosed&) {
        break;
      }
      if (counter && f->msg_type == MsgType::Data) counter->fetch_add(1);
    }
    connection.close();
  });

  try {
    while (auto frame = connection.receive()) {
      switch (frame->msg_type) {
        case MsgType::Ping: {
          auto now = options.clock->now();
          auto pong = make_control_frame(MsgType::Pong, frame->key(), now);
          pong.payload = frame->payload;
          outbox->push(std::move(pong));
          break;
        }
        case MsgType::Subscribe: {
          auto subscriber = subscriber_of(*frame);
          auto key = frame->key();
          if (!tam.has_stream(key)) {
            spdlog::warn("subscription to unknown stream {} ignored", to_string(key));
            break;
          }
          if (subscriptions.add(subscriber, key)) {
            observers[{subscriber, key}] =
                tam.observe(key, [outbox](const StreamFrame& f) { outbox->push(make_data_frame(f)); });
          }
          break;
        }
        case MsgType::Unsubscribe: {
          auto subscriber = subscriber_of(*frame);
          if (subscriptions.remove(subscriber, frame->key())) {
            auto it = observers.find({subscriber, frame->key()});
            if (it != observers.end()) {
              tam.unobserve(it->second);
              observers.erase(it);
            }
          }
          break;
        }
        case MsgType::Data:
          if (options.on_data) {
            if (auto reply = options.on_data(*frame)) outbox->push(std::move(*reply));
          }
          break;
        case MsgType::Pong:
          break;
      }
    }
  } catch (const Error& e) {
    spdlog::warn("publisher connection dropped: {}", e.what());
  }

  for (auto& [_, id] : observers) tam.unobserve(id);
  subscriptions.deactivate_all();
  outbox->close();
  connection.close();
  sender.join();
}

StreamServer::StreamServer(std::unique_ptr<Listener> listener, Tam& tam, PublishOptions options)
    : listener_(std::move(listener)), address_(listener_->address()), tam_(tam), options_(std::move(options)) {
  options_.sent_counter = &sent_;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

StreamServer::~StreamServer() { stop(); }

void StreamServer::accept_loop() {
  while (!stopping_.load()) {
    auto conn = listener_->accept();
    if (!conn) break;
    reap_finished();
    auto session = std::make_unique<Session>();
    session->connection = std::move(conn);
    auto* raw = session.get();
    std::lock_guard lock(sessions_mutex_);
    if (stopping_.load()) {
      session->connection->close();
      break;
    }
    raw->thread = std::thread([this, raw] {
      publish_loop(*raw->connection, tam_, raw->subscriptions, options_);
      raw->done.store(true);
    });
    sessions_.push_back(std::move(session));
  }
}

void StreamServer::reap_finished() {
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

std::size_t StreamServer::active_subscriptions() const {
  std::lock_guard lock(sessions_mutex_);
  std::size_t n = 0;
  for (const auto& s : sessions_) n += s->subscriptions.active_count();
  return n;
}

void StreamServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::list<std::unique_ptr<Session>> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions.swap(sessions_);
  }
  for (auto& s : sessions) s->connection->close();
  for (auto& s : sessions) {
    if (s->thread.joinable()) s->thread.join();
  }
}

}  // namespace ccx
