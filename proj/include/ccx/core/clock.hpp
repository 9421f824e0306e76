#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>

#include "ccx/core/types.hpp"

namespace ccx {

/// Millisecond time source for a core. Implementations must be thread-safe.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

/// Wall clock in ms since the Unix epoch, plus a fixed skew (used to emulate
/// devices whose clocks disagree).
class SystemClock final : public Clock {
 public:
  explicit SystemClock(std::int64_t skew_ms = 0) : skew_ms_(skew_ms) {}

  Timestamp now() const override {
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::system_clock::now().time_since_epoch())
                  .count();
    return Timestamp{static_cast<std::uint64_t>(ms + skew_ms_)};
  }

  std::int64_t skew_ms() const { return skew_ms_; }

 private:
  std::int64_t skew_ms_;
};

/// Logical clock advanced explicitly by a driver (simulation, tests).
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::uint64_t start_ms = 0) : now_(start_ms) {}

  Timestamp now() const override { return Timestamp{now_.load()}; }
  void set(Timestamp t) { now_.store(t.millis); }
  void advance(std::uint64_t ms) { now_.fetch_add(ms); }

 private:
  std::atomic<std::uint64_t> now_;
};

std::shared_ptr<Clock> default_clock();

}  // namespace ccx
