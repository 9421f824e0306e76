#include "ccx/transport/loopback.hpp"

#include <condition_variable>
#include <deque>

namespace ccx {

namespace {

struct Pipe {
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<Bytes> queue;
  bool closed = false;

  bool push(Bytes bytes) {
    std::lock_guard lock(mutex);
    if (closed) return false;
    queue.push_back(std::move(bytes));
    cv.notify_one();
    return true;
  }

  std::optional<Bytes> pop() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return closed || !queue.empty(); });
    if (queue.empty()) return std::nullopt;
    auto bytes = std::move(queue.front());
    queue.pop_front();
    return bytes;
  }

  void close() {
    std::lock_guard lock(mutex);
    closed = true;
    cv.notify_all();
  }
};

class LoopbackConnection final : public Connection {
 public:
  LoopbackConnection(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out, std::string peer)
      : in_(std::move(in)), out_(std::move(out)), peer_(std::move(peer)) {}
  ~LoopbackConnection() override { close(); }

  void send(const WireFrame& frame) override {
    if (!out_->push(encode_frame(frame))) throw ConnectionClosed();
  }

  std::optional<WireFrame> receive() override {
    auto bytes = in_->pop();
    if (!bytes) return std::nullopt;
    return decode_frame(*bytes);
  }

  void close() override {
    in_->close();
    out_->close();
  }

  std::string peer() const override { return peer_; }

 private:
  std::shared_ptr<Pipe> in_, out_;
  std::string peer_;
};

struct PendingQueue {
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::unique_ptr<Connection>> pending;
  bool closed = false;
};

}  // namespace

struct LoopbackChannel::Registry {
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<PendingQueue>> listeners;
  std::uint64_t next_id = 1;
};

namespace {

class LoopbackListener final : public Listener {
 public:
  LoopbackListener(std::shared_ptr<LoopbackChannel::Registry> registry, std::string name,
                   std::shared_ptr<PendingQueue> queue)
      : registry_(std::move(registry)), name_(std::move(name)), queue_(std::move(queue)) {}
  ~LoopbackListener() override { close(); }

  std::unique_ptr<Connection> accept() override {
    std::unique_lock lock(queue_->mutex);
    queue_->cv.wait(lock, [&] { return queue_->closed || !queue_->pending.empty(); });
    if (queue_->pending.empty()) return nullptr;
    auto conn = std::move(queue_->pending.front());
    queue_->pending.pop_front();
    return conn;
  }

  std::string address() const override { return name_; }

  void close() override {
    {
      std::lock_guard lock(registry_->mutex);
      auto it = registry_->listeners.find(name_);
      if (it != registry_->listeners.end() && it->second == queue_) registry_->listeners.erase(it);
    }
    std::lock_guard lock(queue_->mutex);
    queue_->closed = true;
    queue_->pending.clear();
    queue_->cv.notify_all();
  }

 private:
  std::shared_ptr<LoopbackChannel::Registry> registry_;
  std::string name_;
  std::shared_ptr<PendingQueue> queue_;
};

}  // namespace

LoopbackChannel::LoopbackChannel() : registry_(std::make_shared<Registry>()) {}
LoopbackChannel::~LoopbackChannel() = default;

std::unique_ptr<Connection> LoopbackChannel::connect(const std::string& address) {
  std::shared_ptr<PendingQueue> queue;
  {
    std::lock_guard lock(registry_->mutex);
    auto it = registry_->listeners.find(address);
    if (it == registry_->listeners.end()) throw PeerUnreachable("no loopback listener '" + address + "'");
    queue = it->second;
  }
  auto a_to_b = std::make_shared<Pipe>();
  auto b_to_a = std::make_shared<Pipe>();
  auto server_side = std::make_unique<LoopbackConnection>(a_to_b, b_to_a, "incoming");
  {
    std::lock_guard lock(queue->mutex);
    if (queue->closed) throw PeerUnreachable("loopback listener '" + address + "' closed");
    queue->pending.push_back(std::move(server_side));
    queue->cv.notify_one();
  }
  return std::make_unique<LoopbackConnection>(b_to_a, a_to_b, address);
}

std::unique_ptr<Listener> LoopbackChannel::listen(const std::string& bind_address) {
  std::lock_guard lock(registry_->mutex);
  std::string name = bind_address;
  if (name.empty() || name.ends_with(":0")) {
    auto prefix = name.empty() ? std::string("loop") : name.substr(0, name.size() - 2);
    name = prefix + ":" + std::to_string(registry_->next_id++);
  }
  if (registry_->listeners.contains(name)) throw Error("loopback address '" + name + "' already in use");
  auto queue = std::make_shared<PendingQueue>();
  registry_->listeners[name] = queue;
  return std::make_unique<LoopbackListener>(registry_, name, queue);
}

}  // namespace ccx
