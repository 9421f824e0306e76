#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccx/runtime/clock_signal.hpp"
#include "ccx/runtime/filter.hpp"
#include "ccx/signaling/client.hpp"
#include "ccx/transport/channel.hpp"

namespace ccx {

class InvalidDataBlock : public Error {
 public:
  explicit InvalidDataBlock(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Raised when no signaling server accepted the registration.
class RegistrationFailed : public Error {
 public:
  explicit RegistrationFailed(const std::vector<ServerOutcome>& outcomes);
};

enum class Scheduling {
  /// One thread per filter, deadlines on the block clock.
  Threaded,
  /// Ticks run only inside RunningBlock::advance_to (simulation, replay tests).
  Stepped,
};

struct RuntimeOptions {
  std::shared_ptr<Clock> clock = default_clock();
  Scheduling scheduling = Scheduling::Threaded;
  ServerSet signaling;
  std::string listen = "127.0.0.1:0";
  std::uint32_t ttl_s = 10;
  /// Advertised in the registration record (e.g. pos_x, pos_y).
  Params advertise;
  /// Peer addresses that bypass discovery.
  std::map<CoreId, std::string> static_peers;
  std::chrono::milliseconds link_retry{100};
  std::chrono::milliseconds signaling_timeout{1000};
  bool estimate_peer_offsets = true;
};

struct FilterStats {
  FilterId id;
  std::string name;
  std::string type_name;
  bool is_remote = false;
  FilterState state = FilterState::Created;
  std::string fault;
  std::uint64_t ticks = 0;
  std::uint64_t skipped = 0;
  std::uint64_t outputs = 0;
  double mean_period_ms = 0;
  double stddev_period_ms = 0;
  // Remote filters only.
  bool connected = false;
  std::uint64_t mirrored = 0;
  std::uint64_t duplicates = 0;
  std::int64_t offset_ms = 0;
  std::uint64_t rtt_ms = 0;
};

struct RunStats {
  std::vector<FilterStats> filters;
  std::uint64_t injected = 0;
  std::uint64_t injections_rejected = 0;

  const FilterStats* find(FilterId id) const;
};

/// A started DataBlock. Created by start_datablock, torn down by stop_datablock.
class RunningBlock {
 public:
  ~RunningBlock();
  RunningBlock(const RunningBlock&) = delete;
  RunningBlock& operator=(const RunningBlock&) = delete;

  const DataBlockDescriptor& descriptor() const;
  CoreId core() const;
  Tam& tam();
  const Clock& clock() const;
  /// Address of this block's stream server.
  std::string address() const;

  FilterState state(FilterId id) const;
  RunStats stats() const;
  const ClockSignalLog* clock_log(FilterId id) const;

  /// Runs every due tick with deadline <= t in deadline order (ties in
  /// descriptor order). Stepped scheduling only.
  void advance_to(Timestamp t);

  /// Synchronously connects to the producer of `key` and keeps it mirrored.
  /// Throws PeerUnreachable.
  void mirror_remote(const StreamKey& key, std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  /// True once every remote filter has an active link.
  bool links_connected() const;
  /// Subscriptions peers currently hold on this block's streams.
  std::size_t active_subscriptions() const;

  /// Applies an injected COMMAND as if it arrived over the network.
  InjectionResult inject(FilterId filter, const Payload& payload, Timestamp* committed_at = nullptr);

  RunStats stop();

 private:
  friend std::unique_ptr<RunningBlock> start_datablock(const DataBlockDescriptor&, const FilterRegistry&, Tam&,
                                                       DataChannel&, RuntimeOptions);
  struct Impl;
  explicit RunningBlock(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Validates the block, instantiates its filters, opens the stream server,
/// registers with signaling and starts scheduling. Throws InvalidDataBlock,
/// UnknownFilterType or RegistrationFailed; nothing keeps running on failure.
std::unique_ptr<RunningBlock> start_datablock(const DataBlockDescriptor& d, const FilterRegistry& registry, Tam& tam,
                                              DataChannel& channel, RuntimeOptions options = {});

/// Stops filters in reverse order, closes links and deregisters.
RunStats stop_datablock(RunningBlock& block);

}  // namespace ccx
