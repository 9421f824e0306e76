#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ccx/core/clock.hpp"
#include "ccx/core/error.hpp"
#include "ccx/core/types.hpp"

namespace ccx {

class Unreachable : public Error {
 public:
  explicit Unreachable(const std::string& what) : Error("unreachable: " + what) {}
};

/// Four timestamps of one probe: local send, remote receive, remote send, local receive.
struct OffsetSample {
  Timestamp t0, t1, t2, t3;
};

/// offset_ms is the peer clock minus the local clock, so a peer timestamp maps
/// onto the local clock as `peer_t - offset_ms`. Under symmetric path delay the
/// true offset lies within rtt_ms / 2 of the estimate.
struct ClockOffset {
  CoreId peer;
  std::int64_t offset_ms = 0;
  std::uint64_t rtt_ms = 0;

  Timestamp to_local(Timestamp peer_t) const;
  Timestamp to_peer(Timestamp local_t) const;
};

/// offset = ((t1 - t0) + (t2 - t3)) / 2 (floored), rtt = (t3 - t0) - (t2 - t1).
ClockOffset offset_from_sample(CoreId peer, const OffsetSample& s);

/// Median-offset exchange among `samples` (its own rtt is reported with it).
ClockOffset offset_from_samples(CoreId peer, std::vector<OffsetSample> samples);

/// Sends a probe stamped with t0 and returns the remote (t1, t2).
using OffsetProbe = std::function<std::pair<Timestamp, Timestamp>(Timestamp t0)>;

inline constexpr int kOffsetExchanges = 9;

/// Runs `exchanges` probes against `probe`, stamping t0/t3 with `local`.
/// Probe failures propagate (callers map them to Unreachable).
ClockOffset estimate_offset(CoreId peer, const Clock& local, const OffsetProbe& probe,
                            int exchanges = kOffsetExchanges);

}  // namespace ccx
