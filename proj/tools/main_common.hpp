#pragma once

#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ccx/cli/app.hpp"

namespace ccx::tools {

inline void on_signal(int) { interrupt_flag().store(true); }

inline int run_main(std::vector<std::string> args) {
  auto logger = spdlog::stderr_color_mt("ccx");
  spdlog::set_default_logger(logger);
  if (const char* level = std::getenv("CCX_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);
  return cli_main(args, CliIo{std::cin, std::cout, std::cerr});
}

}  // namespace ccx::tools
