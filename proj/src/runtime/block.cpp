#include "ccx/runtime/block.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <set>
#include <thread>

#include "ccx/signaling/offset.hpp"
#include "ccx/transport/publisher.hpp"
#include "ccx/transport/wire.hpp"

namespace ccx {

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += "\n  " + s;
  return out;
}

std::string failed_servers(const std::vector<ServerOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) out += " " + o.server + " (" + o.error + ")";
  return out;
}

}  // namespace

InvalidDataBlock::InvalidDataBlock(std::vector<std::string> violations)
    : Error("invalid DataBlock:" + join_lines(violations)), violations_(std::move(violations)) {}

RegistrationFailed::RegistrationFailed(const std::vector<ServerOutcome>& outcomes)
    : Error("registration failed on every signaling server:" + failed_servers(outcomes)) {}

const FilterStats* RunStats::find(FilterId id) const {
  for (const auto& f : filters) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

namespace {

struct LocalFilter {
  LocalFilter(const FilterDescriptor& d, StreamKey k, std::unique_ptr<FilterImpl> i)
      : desc(&d), key(k), impl(std::move(i)), log(d.id) {}

  const FilterDescriptor* desc;
  StreamKey key;
  std::unique_ptr<FilterImpl> impl;
  std::atomic<FilterState> state{FilterState::Created};
  ClockSignalLog log;

  std::uint64_t max_skew_ms = 0;
  bool hold_stale = false;
  std::optional<SyncTuple> last_sync;

  mutable std::mutex stats_mutex;
  std::string fault;
  std::uint64_t ticks = 0;
  std::uint64_t skipped = 0;
  std::uint64_t outputs = 0;
  std::uint64_t periods = 0;
  double period_mean = 0;
  double period_m2 = 0;
  std::optional<Timestamp> last_start;

  // Scheduling.
  Timestamp origin;
  std::uint64_t k = 0;
  Timestamp next;
  std::mutex wake_mutex;
  std::condition_variable wake;
  bool stop_requested = false;
  std::thread thread;

  bool scheduled() const { return impl->scheduled(); }
};

struct PeerLink {
  CoreId core;
  mutable std::mutex mutex;
  std::condition_variable wake;
  std::vector<StreamKey> keys;
  std::set<StreamKey> subscribed;
  std::shared_ptr<Connection> connection;
  bool connected = false;
  bool stopping = false;
  std::int64_t offset_ms = 0;
  std::uint64_t rtt_ms = 0;
  std::map<StreamKey, std::pair<std::uint64_t, std::uint64_t>> counts;  // mirrored, duplicates
  std::thread thread;
};

}  // namespace

struct RunningBlock::Impl {
  DataBlockDescriptor desc;
  Tam* tam = nullptr;
  DataChannel* channel = nullptr;
  RuntimeOptions options;
  std::vector<std::unique_ptr<LocalFilter>> filters;
  std::map<FilterId, LocalFilter*> by_id;
  std::unique_ptr<StreamServer> server;
  std::unique_ptr<SignalingClient> signaling;
  RegistrationRecord record;

  mutable std::mutex links_mutex;
  std::map<CoreId, std::unique_ptr<PeerLink>> links;

  std::mutex inject_mutex;
  std::atomic<std::uint64_t> injected{0};
  std::atomic<std::uint64_t> rejected{0};

  std::mutex refresh_mutex;
  std::condition_variable refresh_wake;
  bool refresh_stop = false;
  std::thread refresh_thread;

  std::mutex step_mutex;
  std::atomic_bool links_stopped{false};
  std::atomic_bool stopped{false};
  RunStats final_stats;
  const RunningBlock* owner = nullptr;

  // Tick path.
  void tick(LocalFilter& f, Timestamp now);
  void fault(LocalFilter& f, const std::string& reason);
  void run_threaded(LocalFilter& f);

  // Links.
  PeerLink& link_for(CoreId core);
  void run_link(PeerLink& link);
  void serve_link(PeerLink& link);
  std::string resolve(CoreId core);

  std::optional<WireFrame> on_data(const WireFrame& frame);
  InjectionResult inject(FilterId id, const Payload& payload, Timestamp* committed_at);

  void refresh_loop();
  RunStats collect_stats() const;
  void shutdown();
};

void RunningBlock::Impl::fault(LocalFilter& f, const std::string& reason) {
  {
    std::lock_guard lock(f.stats_mutex);
    f.fault = reason;
  }
  f.state = FilterState::Faulted;
  spdlog::error("filter {} ({}) faulted: {}", f.desc->id.value, f.desc->name, reason);
}

void RunningBlock::Impl::tick(LocalFilter& f, Timestamp now) {
  if (f.state != FilterState::Running) return;
  SyncTuple inputs;
  inputs.target = now;
  inputs.max_skew_ms = f.max_skew_ms;
  if (!f.desc->inputs.empty()) {
    try {
      inputs = tam->synchronize(f.desc->inputs, now, f.max_skew_ms);
      f.last_sync = inputs;
    } catch (const NoSampleAvailable&) {
      if (!(f.hold_stale && f.last_sync)) {
        std::lock_guard lock(f.stats_mutex);
        ++f.skipped;
        f.log.skip();
        return;
      }
      inputs = *f.last_sync;
    } catch (const SkewExceeded&) {
      if (!(f.hold_stale && f.last_sync)) {
        std::lock_guard lock(f.stats_mutex);
        ++f.skipped;
        f.log.skip();
        return;
      }
      inputs = *f.last_sync;
    } catch (const std::exception& e) {
      fault(f, e.what());
      return;
    }
  }

  FilterOutput out;
  try {
    out = f.impl->process(inputs, now);
  } catch (const InsufficientHistory&) {
    std::lock_guard lock(f.stats_mutex);
    ++f.skipped;
    f.log.skip();
    return;
  } catch (const NoSampleAvailable&) {
    std::lock_guard lock(f.stats_mutex);
    ++f.skipped;
    f.log.skip();
    return;
  } catch (const SkewExceeded&) {
    std::lock_guard lock(f.stats_mutex);
    ++f.skipped;
    f.log.skip();
    return;
  } catch (const std::exception& e) {
    fault(f, e.what());
    return;
  }

  try {
    for (auto& o : out) tam->insert(StreamFrame{f.key, o.t, std::move(o.payload)});
  } catch (const std::exception& e) {
    fault(f, e.what());
    return;
  }

  Timestamp end = options.scheduling == Scheduling::Threaded ? options.clock->now() : now;
  f.log.append(Tick{now, std::max(end, now)});
  std::lock_guard lock(f.stats_mutex);
  ++f.ticks;
  f.outputs += out.size();
  if (f.last_start) {
    double period = static_cast<double>(now.millis - f.last_start->millis);
    ++f.periods;
    double delta = period - f.period_mean;
    f.period_mean += delta / static_cast<double>(f.periods);
    f.period_m2 += delta * (period - f.period_mean);
  }
  f.last_start = now;
}

void RunningBlock::Impl::run_threaded(LocalFilter& f) {
  const std::uint64_t dt = f.desc->dt_ms;
  while (true) {
    {
      std::unique_lock lock(f.wake_mutex);
      while (!f.stop_requested) {
        auto now = options.clock->now();
        if (now >= f.next) break;
        f.wake.wait_for(lock, std::chrono::milliseconds(f.next.millis - now.millis));
      }
      if (f.stop_requested) return;
    }
    auto now = options.clock->now();
    tick(f, now);
    if (f.state != FilterState::Running) return;
    ++f.k;
    auto after = options.clock->now();
    if (f.origin.millis + f.k * dt <= after.millis) {
      // Overrun: skip missed deadlines instead of bursting.
      f.k = (after.millis - f.origin.millis) / dt + 1;
    }
    f.next = Timestamp{f.origin.millis + f.k * dt};
  }
}

std::string RunningBlock::Impl::resolve(CoreId core) {
  if (auto it = options.static_peers.find(core); it != options.static_peers.end()) return it->second;
  if (!signaling) throw PeerUnreachable("no address for core " + std::to_string(core.value));
  try {
    return signaling->discover(core).address;
  } catch (const Error& e) {
    throw PeerUnreachable(e.what());
  }
}

PeerLink& RunningBlock::Impl::link_for(CoreId core) {
  std::lock_guard lock(links_mutex);
  auto& slot = links[core];
  if (!slot) {
    slot = std::make_unique<PeerLink>();
    slot->core = core;
    auto* raw = slot.get();
    raw->thread = std::thread([this, raw] { run_link(*raw); });
  }
  return *slot;
}

void RunningBlock::Impl::serve_link(PeerLink& link) {
  auto address = resolve(link.core);
  std::shared_ptr<Connection> conn = channel->connect(address);
  {
    std::lock_guard lock(link.mutex);
    if (link.stopping) {
      conn->close();
      return;
    }
    link.connection = conn;
  }

  ClockOffset offset{link.core, 0, 0};
  if (options.estimate_peer_offsets) {
    OffsetProbe probe = [&](Timestamp t0) {
      conn->send(make_control_frame(MsgType::Ping, StreamKey{desc.core, FilterId{0}}, t0));
      while (true) {
        auto reply = receive_for(*conn, std::chrono::milliseconds(1000));
        if (!reply) throw PeerUnreachable("no PONG from " + address);
        if (reply->msg_type == MsgType::Pong) return std::pair{reply->t, reply->t};
      }
    };
    offset = estimate_offset(link.core, *options.clock, probe);
    spdlog::debug("core {}: offset {} ms (rtt {} ms)", link.core.value, offset.offset_ms, offset.rtt_ms);
  }

  {
    std::lock_guard lock(link.mutex);
    link.offset_ms = offset.offset_ms;
    link.rtt_ms = offset.rtt_ms;
    link.subscribed.clear();
    for (const auto& key : link.keys) {
      conn->send(make_subscribe_frame(MsgType::Subscribe, desc.core, key));
      link.subscribed.insert(key);
    }
    link.connected = true;
  }
  link.wake.notify_all();

  while (auto frame = conn->receive()) {
    if (frame->msg_type != MsgType::Data) continue;
    auto sf = to_stream_frame(*frame);
    sf.t = offset.to_local(sf.t);
    bool dup = false;
    {
      std::lock_guard lock(link.mutex);
      if (!link.subscribed.contains(sf.key)) continue;
    }
    try {
      tam->insert(sf);
    } catch (const NonMonotoneTimestamp&) {
      dup = true;
    }
    std::lock_guard lock(link.mutex);
    auto& c = link.counts[sf.key];
    (dup ? c.second : c.first) += 1;
  }
}

void RunningBlock::Impl::run_link(PeerLink& link) {
  while (true) {
    {
      std::unique_lock lock(link.mutex);
      link.wake.wait(lock, [&] { return link.stopping || !link.keys.empty(); });
      if (link.stopping) return;
    }
    try {
      serve_link(link);
    } catch (const std::exception& e) {
      spdlog::debug("link to core {}: {}", link.core.value, e.what());
    }
    std::unique_lock lock(link.mutex);
    if (link.connection) link.connection->close();
    link.connection.reset();
    link.connected = false;
    link.subscribed.clear();
    link.wake.notify_all();
    link.wake.wait_for(lock, options.link_retry, [&] { return link.stopping; });
    if (link.stopping) return;
  }
}

InjectionResult RunningBlock::Impl::inject(FilterId id, const Payload& payload, Timestamp* committed_at) {
  auto it = by_id.find(id);
  if (it == by_id.end()) {
    ++rejected;
    return {false, "UnknownTarget", {}};
  }
  auto& f = *it->second;
  if (f.state != FilterState::Running) {
    ++rejected;
    return {false, "TargetNotRunning", {}};
  }
  std::lock_guard lock(inject_mutex);
  auto result = f.impl->inject(payload);
  if (!result.accepted) {
    ++rejected;
    return result;
  }
  auto t = options.clock->now();
  if (auto newest = tam->newest(f.key); newest && *newest >= t) t = Timestamp{newest->millis + 1};
  tam->insert(StreamFrame{f.key, t, payload});
  ++injected;
  {
    std::lock_guard s(f.stats_mutex);
    ++f.outputs;
  }
  if (committed_at) *committed_at = t;
  return result;
}

std::optional<WireFrame> RunningBlock::Impl::on_data(const WireFrame& frame) {
  InjectionResult result;
  Timestamp t;
  if (frame.core != desc.core) {
    result = {false, "UnknownTarget", {}};
  } else {
    try {
      Payload payload{static_cast<PayloadKind>(frame.payload_kind), frame.payload};
      result = inject(frame.filter, payload, &t);
    } catch (const std::exception& e) {
      result = {false, "ValidationFailed", e.what()};
    }
  }
  if (result.accepted) return make_data_frame(StreamFrame{frame.key(), t, {static_cast<PayloadKind>(frame.payload_kind), frame.payload}});
  Command err;
  err.fields["error"] = result.error;
  if (!result.key.empty()) err.fields["key"] = result.key;
  auto reply = make_control_frame(MsgType::Unsubscribe, frame.key(), options.clock->now());
  auto p = encode(err);
  reply.payload_kind = static_cast<std::uint16_t>(p.kind);
  reply.payload = std::move(p.bytes);
  return reply;
}

void RunningBlock::Impl::refresh_loop() {
  auto period = std::chrono::milliseconds(std::max<std::uint64_t>(1, record.ttl_s) * 500);
  std::unique_lock lock(refresh_mutex);
  while (!refresh_wake.wait_for(lock, period, [&] { return refresh_stop; })) {
    lock.unlock();
    record.client_clock = options.clock->now();
    for (const auto& o : signaling->refresh(record)) {
      if (!o.ok) spdlog::warn("refresh on {} failed: {}", o.server, o.error);
    }
    lock.lock();
  }
}

RunStats RunningBlock::Impl::collect_stats() const {
  RunStats out;
  out.injected = injected.load();
  out.injections_rejected = rejected.load();
  std::map<StreamKey, PeerLink*> link_of;
  {
    std::lock_guard lock(links_mutex);
    for (const auto& [core, link] : links) {
      std::lock_guard l(link->mutex);
      for (const auto& k : link->keys) link_of[k] = link.get();
    }
  }
  for (const auto& fd : desc.filters) {
    FilterStats s;
    s.id = fd.id;
    s.name = fd.name;
    s.type_name = fd.type_name;
    s.is_remote = fd.is_remote;
    if (fd.is_remote) {
      auto key = output_key(desc, fd);
      if (auto it = link_of.find(key); it != link_of.end()) {
        std::lock_guard l(it->second->mutex);
        s.connected = it->second->connected;
        s.offset_ms = it->second->offset_ms;
        s.rtt_ms = it->second->rtt_ms;
        if (auto c = it->second->counts.find(key); c != it->second->counts.end()) {
          s.mirrored = c->second.first;
          s.duplicates = c->second.second;
        }
      }
      s.state = links_stopped ? FilterState::Stopped : FilterState::Running;
      out.filters.push_back(s);
      continue;
    }
    auto it = by_id.find(fd.id);
    if (it == by_id.end()) continue;
    const auto& f = *it->second;
    s.state = f.state.load();
    std::lock_guard l(f.stats_mutex);
    s.fault = f.fault;
    s.ticks = f.ticks;
    s.skipped = f.skipped;
    s.outputs = f.outputs;
    s.mean_period_ms = f.period_mean;
    s.stddev_period_ms = f.periods > 1 ? std::sqrt(f.period_m2 / static_cast<double>(f.periods - 1)) : 0.0;
    out.filters.push_back(s);
  }
  return out;
}

void RunningBlock::Impl::shutdown() {
  if (refresh_thread.joinable()) {
    {
      std::lock_guard lock(refresh_mutex);
      refresh_stop = true;
    }
    refresh_wake.notify_all();
    refresh_thread.join();
  }

  for (auto it = filters.rbegin(); it != filters.rend(); ++it) {
    auto& f = **it;
    {
      std::lock_guard lock(f.wake_mutex);
      f.stop_requested = true;
    }
    f.wake.notify_all();
    if (f.thread.joinable()) f.thread.join();
    if (f.state != FilterState::Created) {
      try {
        f.impl->shutdown();
      } catch (const std::exception& e) {
        spdlog::warn("filter {} shutdown: {}", f.desc->id.value, e.what());
      }
    }
    if (f.state != FilterState::Faulted) f.state = FilterState::Stopped;
  }

  std::vector<PeerLink*> all;
  {
    std::lock_guard lock(links_mutex);
    for (auto& [_, link] : links) all.push_back(link.get());
  }
  for (auto* link : all) {
    std::lock_guard lock(link->mutex);
    link->stopping = true;
    if (link->connection) link->connection->close();
    link->wake.notify_all();
  }
  for (auto* link : all) {
    if (link->thread.joinable()) link->thread.join();
  }

  links_stopped = true;
  if (server) server->stop();
  if (signaling) signaling->deregister(desc.core);
}

RunningBlock::RunningBlock(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) { impl_->owner = this; }

RunningBlock::~RunningBlock() {
  if (impl_) stop();
}

const DataBlockDescriptor& RunningBlock::descriptor() const { return impl_->desc; }
CoreId RunningBlock::core() const { return impl_->desc.core; }
Tam& RunningBlock::tam() { return *impl_->tam; }
const Clock& RunningBlock::clock() const { return *impl_->options.clock; }
std::string RunningBlock::address() const { return impl_->server ? impl_->server->address() : std::string{}; }

FilterState RunningBlock::state(FilterId id) const {
  auto it = impl_->by_id.find(id);
  if (it != impl_->by_id.end()) return it->second->state.load();
  auto* fd = impl_->desc.find(id);
  if (!fd) throw Error("no filter " + std::to_string(id.value));
  return impl_->links_stopped ? FilterState::Stopped : FilterState::Running;
}

RunStats RunningBlock::stats() const { return impl_->stopped ? impl_->final_stats : impl_->collect_stats(); }

const ClockSignalLog* RunningBlock::clock_log(FilterId id) const {
  auto it = impl_->by_id.find(id);
  return it == impl_->by_id.end() ? nullptr : &it->second->log;
}

void RunningBlock::advance_to(Timestamp t) {
  if (impl_->options.scheduling != Scheduling::Stepped) throw Error("advance_to requires stepped scheduling");
  std::lock_guard lock(impl_->step_mutex);
  if (impl_->stopped) return;
  while (true) {
    LocalFilter* due = nullptr;
    for (auto& f : impl_->filters) {
      if (!f->scheduled() || f->state != FilterState::Running || f->next > t) continue;
      if (!due || f->next < due->next) due = f.get();
    }
    if (!due) return;
    auto now = due->next;
    impl_->tick(*due, now);
    ++due->k;
    due->next = Timestamp{due->origin.millis + due->k * due->desc->dt_ms};
  }
}

void RunningBlock::mirror_remote(const StreamKey& key, std::chrono::milliseconds timeout) {
  if (key.core == impl_->desc.core) throw Error("stream " + to_string(key) + " is local");
  impl_->tam->register_stream(key);
  auto& link = impl_->link_for(key.core);
  std::unique_lock lock(link.mutex);
  if (std::find(link.keys.begin(), link.keys.end(), key) == link.keys.end()) link.keys.push_back(key);
  if (link.connected && !link.subscribed.contains(key)) {
    link.connection->send(make_subscribe_frame(MsgType::Subscribe, impl_->desc.core, key));
    link.subscribed.insert(key);
  }
  link.wake.notify_all();
  if (!link.wake.wait_for(lock, timeout, [&] { return link.subscribed.contains(key); })) {
    std::erase(link.keys, key);
    throw PeerUnreachable("stream " + to_string(key) + " not reachable");
  }
}

bool RunningBlock::links_connected() const {
  std::lock_guard lock(impl_->links_mutex);
  for (const auto& [_, link] : impl_->links) {
    std::lock_guard l(link->mutex);
    if (!link->connected) return false;
  }
  return true;
}

std::size_t RunningBlock::active_subscriptions() const {
  return impl_->server ? impl_->server->active_subscriptions() : 0;
}

InjectionResult RunningBlock::inject(FilterId filter, const Payload& payload, Timestamp* committed_at) {
  return impl_->inject(filter, payload, committed_at);
}

RunStats RunningBlock::stop() {
  std::lock_guard lock(impl_->step_mutex);
  if (!impl_->stopped) {
    impl_->shutdown();
    impl_->final_stats = impl_->collect_stats();
    impl_->stopped = true;
  }
  return impl_->final_stats;
}

RunStats stop_datablock(RunningBlock& block) { return block.stop(); }

std::unique_ptr<RunningBlock> start_datablock(const DataBlockDescriptor& d, const FilterRegistry& registry, Tam& tam,
                                              DataChannel& channel, RuntimeOptions options) {
  if (auto violations = validate_datablock(d); !violations.empty()) throw InvalidDataBlock(std::move(violations));

  auto impl = std::make_unique<RunningBlock::Impl>();
  impl->desc = d;
  impl->tam = &tam;
  impl->channel = &channel;
  impl->options = std::move(options);
  auto& opts = impl->options;
  if (!opts.clock) opts.clock = default_clock();

  for (const auto& fd : impl->desc.filters) {
    auto key = output_key(impl->desc, fd);
    std::optional<std::size_t> capacity;
    if (auto it = fd.params.find("capacity"); it != fd.params.end()) capacity = std::stoul(it->second);
    tam.register_stream(key, capacity);
    if (fd.is_remote) continue;
    auto f = std::make_unique<LocalFilter>(fd, key, registry.create(fd.type_name));
    impl->by_id[fd.id] = f.get();
    impl->filters.push_back(std::move(f));
  }

  auto block = std::unique_ptr<RunningBlock>(new RunningBlock(std::move(impl)));
  auto& im = *block->impl_;

  try {
    for (auto& f : im.filters) {
      FilterContext ctx{im.desc, *f->desc, f->key, tam, *opts.clock, block.get()};
      f->max_skew_ms = static_cast<std::uint64_t>(ctx.param_int("max_skew_ms", 2ll * f->desc->dt_ms));
      f->hold_stale = ctx.param("on_stale", "skip") == "hold";
      f->impl->init(ctx);
      f->state = FilterState::Initialized;
    }

    PublishOptions publish;
    publish.clock = opts.clock;
    publish.on_data = [&im](const WireFrame& frame) { return im.on_data(frame); };
    im.server = std::make_unique<StreamServer>(channel.listen(opts.listen), tam, publish);

    if (!opts.signaling.servers.empty()) {
      im.signaling = std::make_unique<SignalingClient>(opts.signaling, opts.signaling_timeout, opts.clock);
      auto& r = im.record;
      r.core = im.desc.core;
      r.address = im.server->address();
      r.client_clock = opts.clock->now();
      r.ttl_s = opts.ttl_s;
      r.params = opts.advertise;
      for (const auto& fd : im.desc.filters) {
        FilterMeta m{fd.id, fd.name, fd.type_name, fd.dt_ms, fd.inputs, 0, fd.is_remote};
        if (auto it = im.by_id.find(fd.id); it != im.by_id.end()) {
          if (auto k = it->second->impl->output_kind()) m.payload_kind = static_cast<std::uint16_t>(*k);
        }
        r.filters.push_back(std::move(m));
      }
      std::vector<ServerOutcome> outcomes;
      try {
        outcomes = im.signaling->register_block(r);
      } catch (const AllServersUnreachable&) {
        for (const auto& s : opts.signaling.servers) outcomes.push_back({s, false, "unreachable"});
        throw RegistrationFailed(outcomes);
      }
      for (const auto& o : outcomes) {
        if (!o.ok) spdlog::warn("RegistrationFailed({}): {}", o.server, o.error);
      }
      im.refresh_thread = std::thread([&im] { im.refresh_loop(); });
    }
  } catch (...) {
    im.signaling.reset();
    block->stop();
    throw;
  }

  for (const auto& fd : im.desc.filters) {
    if (!fd.is_remote) continue;
    auto& link = im.link_for(*remote_source_core(fd));
    std::lock_guard lock(link.mutex);
    link.keys.push_back(output_key(im.desc, fd));
    link.wake.notify_all();
  }

  auto origin = opts.clock->now();
  for (auto& f : im.filters) {
    f->origin = origin;
    f->next = origin;
    f->state = FilterState::Running;
    if (opts.scheduling == Scheduling::Threaded && f->scheduled()) {
      auto* raw = f.get();
      f->thread = std::thread([&im, raw] { im.run_threaded(*raw); });
    }
  }
  return block;
}

}  // namespace ccx
