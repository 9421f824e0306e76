#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace ccx {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitUsage = 2;

struct CliIo {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

/// Set from a signal handler to stop long-running subcommands.
std::atomic_bool& interrupt_flag();

/// Entry point of the `ccx` binary; `args` excludes the program name.
/// Subcommands: run, replay, signal, demo, inspect.
int cli_main(const std::vector<std::string>& args, CliIo io);

/// Splits CCX_SIGNALING-style text ("a:1, b:2") into addresses.
std::vector<std::string> split_server_list(const std::string& text);

}  // namespace ccx
