#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccx/core/payload.hpp"

namespace ccx {

/// Device identity. The low 48 bits carry a MAC-derived value; 0 means unassigned.
struct CoreId {
  std::uint64_t value = 0;

  static constexpr std::uint64_t kMask48 = 0x0000FFFFFFFFFFFFull;

  bool valid() const { return value != 0 && (value & ~kMask48) == 0; }
  auto operator<=>(const CoreId&) const = default;
};

/// Filter identity, unique within one DataBlock.
struct FilterId {
  std::uint32_t value = 0;

  bool valid() const { return value >= 1; }
  auto operator<=>(const FilterId&) const = default;
};

/// Globally unique datastream identifier.
struct StreamKey {
  CoreId core;
  FilterId filter;

  auto operator<=>(const StreamKey&) const = default;
};

std::string to_string(const StreamKey& key);
/// Parses "<core>:<filter>". Throws ccx::Error on bad syntax.
StreamKey parse_stream_key(const std::string& text);

/// Milliseconds on the producing device's clock (after offset correction for mirrored data).
struct Timestamp {
  std::uint64_t millis = 0;

  auto operator<=>(const Timestamp&) const = default;
};

struct StreamFrame {
  StreamKey key;
  Timestamp t;
  Payload payload;

  bool operator==(const StreamFrame&) const = default;
};

using Params = std::map<std::string, std::string>;

constexpr std::size_t kMaxFilterNameLength = 64;

/// One DataBlock row.
struct FilterDescriptor {
  FilterId id;
  std::string name;
  std::string type_name;
  std::uint32_t dt_ms = 0;
  std::vector<StreamKey> inputs;
  bool is_remote = false;
  Params params;

  bool operator==(const FilterDescriptor&) const = default;
};

/// A device's table of filters. A remote filter mirrors StreamKey{source_core(f), f.id},
/// where the source core is named by the `core` param.
struct DataBlockDescriptor {
  CoreId core;
  Timestamp clock_origin;
  std::vector<FilterDescriptor> filters;

  bool operator==(const DataBlockDescriptor&) const = default;

  const FilterDescriptor* find(FilterId id) const;
};

/// Source core of a remote filter (its `core` param), or nullopt when absent/invalid.
std::optional<CoreId> remote_source_core(const FilterDescriptor& f);

/// The datastream produced (or mirrored) by filter `f` of block `d`.
StreamKey output_key(const DataBlockDescriptor& d, const FilterDescriptor& f);

/// Returns every invariant violation, ordered by filter id then rule name.
/// Inputs that name another core must be declared as a remote filter of `d`
/// or appear in `known_remote`.
std::vector<std::string> validate_datablock(const DataBlockDescriptor& d,
                                            const std::vector<StreamKey>& known_remote = {});

}  // namespace ccx

template <>
struct std::hash<ccx::StreamKey> {
  std::size_t operator()(const ccx::StreamKey& k) const noexcept {
    std::uint64_t h = k.core.value * 0x9E3779B97F4A7C15ull;
    h ^= (static_cast<std::uint64_t>(k.filter.value) + 0x7F4A7C15ull) + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};
