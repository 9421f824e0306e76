#pragma once

#include <iosfwd>
#include <string>

#include "ccx/runtime/block.hpp"

namespace ccx {

/// Line commands against a running block: a filter id prints that filter's
/// newest output, `t` prints the clock-signal table, `q` quits.
class Console {
 public:
  Console(RunningBlock& block, std::ostream& out) : block_(block), out_(out) {}

  /// Returns false once `q` was entered.
  bool handle(const std::string& line);
  /// Reads lines until `q` or end of input. Returns true when `q` was entered.
  bool run(std::istream& in);

  std::string latest_line(FilterId id);
  std::string clock_table() const;
  static std::string help();

 private:
  RunningBlock& block_;
  std::ostream& out_;
};

}  // namespace ccx
