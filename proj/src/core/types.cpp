#include "ccx/core/types.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "ccx/core/clock.hpp"
#include "ccx/core/error.hpp"

namespace ccx {

std::string to_string(const StreamKey& key) {
  return std::to_string(key.core.value) + ":" + std::to_string(key.filter.value);
}

namespace {

template <typename T>
T parse_unsigned(std::string_view s, const std::string& context) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error("bad integer '" + std::string(s) + "' in " + context);
  }
  return value;
}

}  // namespace

StreamKey parse_stream_key(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw Error("stream key '" + text + "' must be <core>:<filter>");
  std::string_view sv(text);
  return StreamKey{CoreId{parse_unsigned<std::uint64_t>(sv.substr(0, colon), text)},
                   FilterId{parse_unsigned<std::uint32_t>(sv.substr(colon + 1), text)}};
}

const FilterDescriptor* DataBlockDescriptor::find(FilterId id) const {
  auto it = std::find_if(filters.begin(), filters.end(), [&](const auto& f) { return f.id == id; });
  return it == filters.end() ? nullptr : &*it;
}

std::optional<CoreId> remote_source_core(const FilterDescriptor& f) {
  auto it = f.params.find("core");
  if (it == f.params.end()) return std::nullopt;
  try {
    CoreId c{parse_unsigned<std::uint64_t>(it->second, "core param")};
    if (!c.valid()) return std::nullopt;
    return c;
  } catch (const Error&) {
    return std::nullopt;
  }
}

StreamKey output_key(const DataBlockDescriptor& d, const FilterDescriptor& f) {
  if (f.is_remote) {
    if (auto c = remote_source_core(f)) return StreamKey{*c, f.id};
  }
  return StreamKey{d.core, f.id};
}

std::vector<std::string> validate_datablock(const DataBlockDescriptor& d,
                                            const std::vector<StreamKey>& known_remote) {
  // (filter id, rule name, message); block-level rules sort under id 0.
  struct Violation {
    std::uint32_t id;
    std::string rule;
    std::string message;
  };
  std::vector<Violation> found;

  if (d.core.value == 0) found.push_back({0, "core_unassigned", "core id is unassigned (0)"});
  else if (!d.core.valid()) found.push_back({0, "core_width", "core id uses the high 16 bits"});

  std::set<std::uint32_t> seen;
  std::set<std::uint32_t> reported_dup;
  std::set<StreamKey> available;
  for (const auto& f : d.filters) available.insert(output_key(d, f));
  for (const auto& k : known_remote) available.insert(k);

  for (const auto& f : d.filters) {
    auto id = f.id.value;
    auto label = std::to_string(id);
    if (!f.id.valid()) found.push_back({id, "id_range", "filter id 0 is reserved"});
    if (!seen.insert(id).second && reported_dup.insert(id).second) {
      found.push_back({id, "duplicate_id", "duplicate filter id " + label});
    }
    if (f.dt_ms == 0) found.push_back({id, "dt", "filter " + label + " violates dt_ms > 0"});
    if (f.name.size() > kMaxFilterNameLength) {
      found.push_back({id, "name_length", "filter " + label + " name exceeds 64 chars"});
    }
    if (f.is_remote) {
      if (!f.inputs.empty()) found.push_back({id, "remote_inputs", "remote filter " + label + " declares inputs"});
      if (!remote_source_core(f)) {
        found.push_back({id, "remote_core", "remote filter " + label + " has no valid source core"});
      }
    } else if (f.type_name.empty()) {
      found.push_back({id, "type", "filter " + label + " has no type"});
    }
    for (const auto& in : f.inputs) {
      if (!available.contains(in)) {
        found.push_back({id, "unknown_input", "filter " + label + " input " + to_string(in) + " is not available"});
      }
    }
  }

  std::stable_sort(found.begin(), found.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.id, a.rule) < std::tie(b.id, b.rule);
  });
  std::vector<std::string> out;
  out.reserve(found.size());
  for (auto& v : found) out.push_back(std::move(v.message));
  return out;
}

std::shared_ptr<Clock> default_clock() {
  static auto clock = std::make_shared<SystemClock>();
  return clock;
}

}  // namespace ccx
