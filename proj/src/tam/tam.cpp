#include "ccx/tam/tam.hpp"

#include <algorithm>

namespace ccx {

const SyncSample* SyncTuple::find(const StreamKey& key) const {
  for (const auto& s : samples) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

TamCache::TamCache(StreamKey key, std::size_t capacity) : key_(key), slots_(std::max<std::size_t>(capacity, 1)) {}

std::size_t TamCache::size() const {
  std::shared_lock lock(mutex_);
  return size_;
}

void TamCache::insert(Timestamp t, Payload payload) {
  std::unique_lock lock(mutex_);
  if (size_ > 0) {
    auto newest = slot(size_ - 1).t;
    if (t <= newest) throw NonMonotoneTimestamp(key_, t, newest);
  }
  if (size_ < slots_.size()) {
    slots_[(head_ + size_) % slots_.size()] = TamEntry{t, std::move(payload)};
    ++size_;
  } else {
    slots_[head_] = TamEntry{t, std::move(payload)};
    head_ = (head_ + 1) % slots_.size();
  }
}

std::size_t TamCache::count_at_or_before(Timestamp t) const {
  // Binary search over the logical (oldest-first) order of the ring.
  std::size_t lo = 0, hi = size_;
  while (lo < hi) {
    auto mid = lo + (hi - lo) / 2;
    if (slot(mid).t <= t) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

std::optional<TamEntry> TamCache::at_or_before(Timestamp t) const {
  std::shared_lock lock(mutex_);
  auto n = count_at_or_before(t);
  if (n == 0) return std::nullopt;
  return slot(n - 1);
}

std::vector<TamEntry> TamCache::window(Timestamp t, std::size_t count) const {
  std::shared_lock lock(mutex_);
  auto n = count_at_or_before(t);
  if (n < count) throw InsufficientHistory(key_, n, count);
  std::vector<TamEntry> out;
  out.reserve(count);
  for (auto i = n - count; i < n; ++i) out.push_back(slot(i));
  return out;
}

std::vector<TamEntry> TamCache::snapshot() const {
  std::shared_lock lock(mutex_);
  std::vector<TamEntry> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(slot(i));
  return out;
}

std::optional<Timestamp> TamCache::newest() const {
  std::shared_lock lock(mutex_);
  if (size_ == 0) return std::nullopt;
  return slot(size_ - 1).t;
}

Tam::Tam(std::size_t default_capacity) : default_capacity_(std::max<std::size_t>(default_capacity, 1)) {}

void Tam::register_stream(const StreamKey& key, std::optional<std::size_t> capacity) {
  std::unique_lock lock(map_mutex_);
  if (streams_.contains(key)) return;
  streams_.emplace(key, std::make_shared<Stream>(key, capacity.value_or(default_capacity_)));
}

bool Tam::has_stream(const StreamKey& key) const {
  std::shared_lock lock(map_mutex_);
  return streams_.contains(key);
}

std::vector<StreamKey> Tam::keys() const {
  std::shared_lock lock(map_mutex_);
  std::vector<StreamKey> out;
  for (const auto& [k, _] : streams_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<Tam::Stream> Tam::stream(const StreamKey& key) const {
  std::shared_lock lock(map_mutex_);
  auto it = streams_.find(key);
  if (it == streams_.end()) throw UnknownStream(key);
  return it->second;
}

void Tam::insert(const StreamFrame& frame) {
  auto s = stream(frame.key);
  std::lock_guard observers_lock(s->observers_mutex);
  s->cache.insert(frame.t, frame.payload);
  for (auto& [id, fn] : s->observers) fn(frame);
}

TamEntry Tam::query_at_or_before(const StreamKey& key, Timestamp t) const {
  auto entry = stream(key)->cache.at_or_before(t);
  if (!entry) throw NoSampleAvailable(key, t);
  return std::move(*entry);
}

std::vector<TamEntry> Tam::query_window(const StreamKey& key, Timestamp t, std::size_t count) const {
  if (count == 0) throw Error("query_window requires count >= 1");
  return stream(key)->cache.window(t, count);
}

SyncTuple Tam::synchronize(const std::vector<StreamKey>& keys, Timestamp t, std::uint64_t max_skew_ms) const {
  SyncTuple out{t, {}, max_skew_ms};
  out.samples.reserve(keys.size());
  for (const auto& key : keys) {
    auto entry = query_at_or_before(key, t);
    auto skew = t.millis - entry.t.millis;
    if (skew > max_skew_ms) throw SkewExceeded(key, skew, max_skew_ms);
    out.samples.push_back(SyncSample{key, entry.t, std::move(entry.payload)});
  }
  return out;
}

std::optional<Timestamp> Tam::newest(const StreamKey& key) const { return stream(key)->cache.newest(); }

std::vector<TamEntry> Tam::entries(const StreamKey& key) const { return stream(key)->cache.snapshot(); }

Tam::ObserverId Tam::observe(const StreamKey& key, Observer fn) {
  auto s = stream(key);
  ObserverId id;
  {
    std::lock_guard lock(id_mutex_);
    id = next_observer_++;
    observer_keys_[id] = key;
  }
  std::lock_guard lock(s->observers_mutex);
  s->observers.emplace_back(id, std::move(fn));
  return id;
}

void Tam::unobserve(ObserverId id) {
  StreamKey key;
  {
    std::lock_guard lock(id_mutex_);
    auto it = observer_keys_.find(id);
    if (it == observer_keys_.end()) return;
    key = it->second;
    observer_keys_.erase(it);
  }
  auto s = stream(key);
  std::lock_guard lock(s->observers_mutex);
  std::erase_if(s->observers, [&](const auto& entry) { return entry.first == id; });
}

}  // namespace ccx
