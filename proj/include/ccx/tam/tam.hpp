#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "ccx/core/error.hpp"
#include "ccx/core/types.hpp"

namespace ccx {

class NonMonotoneTimestamp : public Error {
 public:
  NonMonotoneTimestamp(const StreamKey& key, Timestamp t, Timestamp newest)
      : Error("non-monotone timestamp " + std::to_string(t.millis) + " <= " + std::to_string(newest.millis) +
              " on stream " + to_string(key)) {}
};

class UnknownStream : public Error {
 public:
  explicit UnknownStream(const StreamKey& key) : Error("unknown stream " + to_string(key)) {}
};

class NoSampleAvailable : public Error {
 public:
  NoSampleAvailable(const StreamKey& key, Timestamp t)
      : Error("no sample at or before " + std::to_string(t.millis) + " on stream " + to_string(key)), key_(key) {}
  const StreamKey& key() const { return key_; }

 private:
  StreamKey key_;
};

class InsufficientHistory : public Error {
 public:
  InsufficientHistory(const StreamKey& key, std::size_t have, std::size_t need)
      : Error("insufficient history on stream " + to_string(key) + ": " + std::to_string(have) + " of " +
              std::to_string(need)),
        key_(key) {}
  const StreamKey& key() const { return key_; }

 private:
  StreamKey key_;
};

class SkewExceeded : public Error {
 public:
  SkewExceeded(const StreamKey& key, std::uint64_t skew_ms, std::uint64_t max_skew_ms)
      : Error("stream " + to_string(key) + " is stale by " + std::to_string(skew_ms) + " ms (max " +
              std::to_string(max_skew_ms) + ")"),
        key_(key) {}
  const StreamKey& key() const { return key_; }

 private:
  StreamKey key_;
};

struct TamEntry {
  Timestamp t;
  Payload payload;

  bool operator==(const TamEntry&) const = default;
};

struct SyncSample {
  StreamKey key;
  Timestamp t;
  Payload payload;
};

/// Per-input samples gathered at a common target timestamp.
struct SyncTuple {
  Timestamp target;
  std::vector<SyncSample> samples;
  std::uint64_t max_skew_ms = 0;

  const SyncSample* find(const StreamKey& key) const;
};

/// Fixed-capacity FIFO of (timestamp, payload) with strictly increasing
/// timestamps. One writer, any number of concurrent readers.
class TamCache {
 public:
  TamCache(StreamKey key, std::size_t capacity);

  const StreamKey& key() const { return key_; }
  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const;

  void insert(Timestamp t, Payload payload);

  std::optional<TamEntry> at_or_before(Timestamp t) const;
  /// The `count` newest entries with timestamp <= t, oldest first.
  std::vector<TamEntry> window(Timestamp t, std::size_t count) const;
  std::vector<TamEntry> snapshot() const;
  std::optional<Timestamp> newest() const;

 private:
  const TamEntry& slot(std::size_t logical) const { return slots_[(head_ + logical) % slots_.size()]; }
  // Number of entries with timestamp <= t (requires lock held).
  std::size_t count_at_or_before(Timestamp t) const;

  StreamKey key_;
  mutable std::shared_mutex mutex_;
  std::vector<TamEntry> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

/// Temporal Addressable Memory: one TamCache per registered datastream, plus
/// insert observers used by publishers and recorders.
class Tam {
 public:
  using Observer = std::function<void(const StreamFrame&)>;
  using ObserverId = std::uint64_t;

  explicit Tam(std::size_t default_capacity = 64);
  Tam(const Tam&) = delete;
  Tam& operator=(const Tam&) = delete;

  std::size_t default_capacity() const { return default_capacity_; }

  /// Idempotent; a repeated registration keeps the existing cache.
  void register_stream(const StreamKey& key, std::optional<std::size_t> capacity = std::nullopt);
  bool has_stream(const StreamKey& key) const;
  std::vector<StreamKey> keys() const;

  void insert(const StreamFrame& frame);

  TamEntry query_at_or_before(const StreamKey& key, Timestamp t) const;
  std::vector<TamEntry> query_window(const StreamKey& key, Timestamp t, std::size_t count) const;
  SyncTuple synchronize(const std::vector<StreamKey>& keys, Timestamp t, std::uint64_t max_skew_ms) const;

  std::optional<Timestamp> newest(const StreamKey& key) const;
  std::vector<TamEntry> entries(const StreamKey& key) const;

  /// `fn` runs in the inserting context after each committed insert on `key`,
  /// in insertion order. It must not call observe/unobserve itself.
  ObserverId observe(const StreamKey& key, Observer fn);
  /// Blocks until an in-flight callback of this observer has returned.
  void unobserve(ObserverId id);

 private:
  struct Stream {
    explicit Stream(StreamKey key, std::size_t capacity) : cache(key, capacity) {}
    TamCache cache;
    std::mutex observers_mutex;
    std::vector<std::pair<ObserverId, Observer>> observers;
  };

  std::shared_ptr<Stream> stream(const StreamKey& key) const;

  std::size_t default_capacity_;
  mutable std::shared_mutex map_mutex_;
  std::unordered_map<StreamKey, std::shared_ptr<Stream>> streams_;
  std::mutex id_mutex_;
  ObserverId next_observer_ = 1;
  std::unordered_map<ObserverId, StreamKey> observer_keys_;
};

}  // namespace ccx
