#include "ccx/signaling/offset.hpp"

#include <algorithm>

namespace ccx {

namespace {

std::int64_t diff(Timestamp a, Timestamp b) {
  return static_cast<std::int64_t>(a.millis) - static_cast<std::int64_t>(b.millis);
}

std::int64_t floor_half(std::int64_t v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

}  // namespace

Timestamp ClockOffset::to_local(Timestamp peer_t) const {
  auto v = static_cast<std::int64_t>(peer_t.millis) - offset_ms;
  return Timestamp{static_cast<std::uint64_t>(std::max<std::int64_t>(v, 0))};
}

Timestamp ClockOffset::to_peer(Timestamp local_t) const {
  auto v = static_cast<std::int64_t>(local_t.millis) + offset_ms;
  return Timestamp{static_cast<std::uint64_t>(std::max<std::int64_t>(v, 0))};
}

ClockOffset offset_from_sample(CoreId peer, const OffsetSample& s) {
  ClockOffset out;
  out.peer = peer;
  out.offset_ms = floor_half(diff(s.t1, s.t0) + diff(s.t2, s.t3));
  out.rtt_ms = static_cast<std::uint64_t>(std::max<std::int64_t>(diff(s.t3, s.t0) - diff(s.t2, s.t1), 0));
  return out;
}

ClockOffset offset_from_samples(CoreId peer, std::vector<OffsetSample> samples) {
  if (samples.empty()) throw Error("offset estimation needs at least one exchange");
  std::vector<ClockOffset> offsets;
  offsets.reserve(samples.size());
  for (const auto& s : samples) offsets.push_back(offset_from_sample(peer, s));
  std::stable_sort(offsets.begin(), offsets.end(), [](const ClockOffset& a, const ClockOffset& b) {
    if (a.offset_ms != b.offset_ms) return a.offset_ms < b.offset_ms;
    return a.rtt_ms < b.rtt_ms;
  });
  return offsets[offsets.size() / 2];
}

ClockOffset estimate_offset(CoreId peer, const Clock& local, const OffsetProbe& probe, int exchanges) {
  std::vector<OffsetSample> samples;
  samples.reserve(static_cast<std::size_t>(exchanges));
  for (int i = 0; i < exchanges; ++i) {
    OffsetSample s;
    s.t0 = local.now();
    std::tie(s.t1, s.t2) = probe(s.t0);
    s.t3 = local.now();
    samples.push_back(s);
  }
  return offset_from_samples(peer, std::move(samples));
}

}  // namespace ccx
