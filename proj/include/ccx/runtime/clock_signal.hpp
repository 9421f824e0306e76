#pragma once

#include <cstddef>
#include <mutex>
#include <vector>

#include "ccx/core/types.hpp"

namespace ccx {

/// High interval of one computing cycle.
struct Tick {
  Timestamp start;
  Timestamp end;
};

/// Bounded ring of the most recent ticks of one filter.
class ClockSignalLog {
 public:
  static constexpr std::size_t kCapacity = 4096;

  explicit ClockSignalLog(FilterId filter) : filter_(filter) {}

  FilterId filter() const { return filter_; }
  void append(Tick tick);
  std::vector<Tick> ticks() const;
  std::size_t total() const;
  /// Ticks that ran without producing a cycle (missing or stale inputs).
  void skip();
  std::size_t skipped() const;

 private:
  FilterId filter_;
  mutable std::mutex mutex_;
  std::vector<Tick> ring_;
  std::size_t next_ = 0;
  std::size_t total_ = 0;
  std::size_t skipped_ = 0;
};

struct ClockSignalSummary {
  std::size_t ticks = 0;  // ticks retained in the log
  double ticks_per_s = 0;
  double mean_period_ms = 0;
  double max_period_ms = 0;
  double mean_high_ms = 0;
};

ClockSignalSummary summarize(const std::vector<Tick>& ticks);

}  // namespace ccx
