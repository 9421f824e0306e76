#include "ccx/runtime/clock_signal.hpp"

#include <algorithm>

namespace ccx {

void ClockSignalLog::append(Tick tick) {
  std::lock_guard lock(mutex_);
  if (ring_.size() < kCapacity) {
    ring_.push_back(tick);
  } else {
    ring_[next_] = tick;
  }
  next_ = (next_ + 1) % kCapacity;
  ++total_;
}

std::vector<Tick> ClockSignalLog::ticks() const {
  std::lock_guard lock(mutex_);
  if (ring_.size() < kCapacity) return ring_;
  std::vector<Tick> out;
  out.reserve(kCapacity);
  out.insert(out.end(), ring_.begin() + static_cast<std::ptrdiff_t>(next_), ring_.end());
  out.insert(out.end(), ring_.begin(), ring_.begin() + static_cast<std::ptrdiff_t>(next_));
  return out;
}

std::size_t ClockSignalLog::total() const {
  std::lock_guard lock(mutex_);
  return total_;
}

void ClockSignalLog::skip() {
  std::lock_guard lock(mutex_);
  ++skipped_;
}

std::size_t ClockSignalLog::skipped() const {
  std::lock_guard lock(mutex_);
  return skipped_;
}

ClockSignalSummary summarize(const std::vector<Tick>& ticks) {
  ClockSignalSummary s;
  s.ticks = ticks.size();
  if (ticks.empty()) return s;
  double high = 0;
  for (const auto& t : ticks) high += static_cast<double>(t.end.millis - t.start.millis);
  s.mean_high_ms = high / static_cast<double>(ticks.size());
  if (ticks.size() < 2) return s;
  for (std::size_t i = 1; i < ticks.size(); ++i) {
    s.max_period_ms = std::max(s.max_period_ms, static_cast<double>(ticks[i].start.millis - ticks[i - 1].start.millis));
  }
  auto span = static_cast<double>(ticks.back().start.millis - ticks.front().start.millis);
  s.mean_period_ms = span / static_cast<double>(ticks.size() - 1);
  if (span > 0) s.ticks_per_s = 1000.0 / s.mean_period_ms;
  return s;
}

}  // namespace ccx
