#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccx/core/types.hpp"

namespace ccx {

/// Advertised metadata of one filter.
struct FilterMeta {
  FilterId id;
  std::string name;
  std::string type_name;
  std::uint32_t dt_ms = 0;
  std::vector<StreamKey> inputs;
  std::uint16_t payload_kind = 0;  // 0 when not declared
  bool is_remote = false;

  bool operator==(const FilterMeta&) const = default;
};

/// A DataBlock registration as held by a signaling server.
struct RegistrationRecord {
  CoreId core;
  std::string address;  // DataChannel address of the core's stream server
  Timestamp registered_at_server_time;
  Timestamp client_clock;
  std::uint32_t ttl_s = 10;
  Params params;  // e.g. pos_x / pos_y for distance-based auto-connect
  std::vector<FilterMeta> filters;

  bool operator==(const RegistrationRecord&) const = default;

  bool fresh_at(Timestamp server_now) const {
    return server_now.millis <= registered_at_server_time.millis + std::uint64_t{ttl_s} * 1000;
  }
  std::optional<std::pair<double, double>> position() const;
};

nlohmann::json to_json(const RegistrationRecord& r);
/// Throws ccx::Error on missing or mistyped fields.
RegistrationRecord record_from_json(const nlohmann::json& j);

}  // namespace ccx
