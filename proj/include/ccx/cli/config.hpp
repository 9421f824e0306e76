#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccx/core/error.hpp"
#include "ccx/core/types.hpp"
#include "ccx/sim/scenario.hpp"

namespace ccx {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class ConfigNotFound : public Error {
 public:
  explicit ConfigNotFound(const std::filesystem::path& path) : Error("cannot read " + path.string()) {}
};

/// A pipeline file: one DataBlock plus the settings of the process hosting it.
struct PipelineConfig {
  DataBlockDescriptor block;
  std::vector<std::string> signaling;
  std::optional<std::uint32_t> tam_capacity;
  std::optional<std::string> listen;
  std::optional<std::string> record_dir;
  std::optional<std::string> replay;

  bool operator==(const PipelineConfig&) const = default;
};

/// Line-oriented INI grammar:
///
///   [Core]
///   ID = 161
///   Signaling = ["127.0.0.1:7400", "127.0.0.1:7401"]
///   TamCapacity = 64
///
///   [Filter_1]
///   Name = camera
///   Type = source.image_pattern
///   dt = 50
///   IsRemote = false
///   Inputs = ["161:2"]
///   Param.width = 64
///
/// Lines whose first non-blank character is `#` are comments. Unknown keys,
/// duplicate keys and duplicate sections are errors.
PipelineConfig parse_config(const std::string& text);
std::string serialize_config(const PipelineConfig& config);

/// Reads and parses `path`, then checks the DataBlock invariants.
/// Throws ConfigNotFound, ParseError or InvalidDataBlock.
PipelineConfig load_config(const std::filesystem::path& path);

/// `[Scenario]` and optional `[Dwa]` sections; see scenarios/*.conf.
sim::ScenarioConfig parse_scenario(const std::string& text);
sim::ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Reads a whole file. Throws ConfigNotFound.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ccx
