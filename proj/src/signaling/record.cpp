#include "ccx/signaling/record.hpp"

#include "ccx/core/error.hpp"

namespace ccx {

std::optional<std::pair<double, double>> RegistrationRecord::position() const {
  auto x = params.find("pos_x");
  auto y = params.find("pos_y");
  if (x == params.end() || y == params.end()) return std::nullopt;
  try {
    std::size_t nx = 0, ny = 0;
    double px = std::stod(x->second, &nx);
    double py = std::stod(y->second, &ny);
    if (nx != x->second.size() || ny != y->second.size()) return std::nullopt;
    return std::make_pair(px, py);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

nlohmann::json to_json(const RegistrationRecord& r) {
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& f : r.filters) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& k : f.inputs) inputs.push_back(to_string(k));
    filters.push_back({{"id", f.id.value},
                       {"name", f.name},
                       {"type", f.type_name},
                       {"dt_ms", f.dt_ms},
                       {"inputs", inputs},
                       {"kind", f.payload_kind},
                       {"remote", f.is_remote}});
  }
  return {{"core", r.core.value},
          {"address", r.address},
          {"registered_at", r.registered_at_server_time.millis},
          {"client_clock", r.client_clock.millis},
          {"ttl_s", r.ttl_s},
          {"params", r.params},
          {"filters", filters}};
}

RegistrationRecord record_from_json(const nlohmann::json& j) {
  try {
    RegistrationRecord r;
    r.core = CoreId{j.at("core").get<std::uint64_t>()};
    r.address = j.at("address").get<std::string>();
    r.registered_at_server_time = Timestamp{j.value("registered_at", std::uint64_t{0})};
    r.client_clock = Timestamp{j.value("client_clock", std::uint64_t{0})};
    r.ttl_s = j.value("ttl_s", 10u);
    if (j.contains("params")) r.params = j.at("params").get<Params>();
    for (const auto& f : j.value("filters", nlohmann::json::array())) {
      FilterMeta m;
      m.id = FilterId{f.at("id").get<std::uint32_t>()};
      m.name = f.value("name", "");
      m.type_name = f.value("type", "");
      m.dt_ms = f.value("dt_ms", 0u);
      for (const auto& k : f.value("inputs", nlohmann::json::array())) {
        m.inputs.push_back(parse_stream_key(k.get<std::string>()));
      }
      m.payload_kind = f.value("kind", std::uint16_t{0});
      m.is_remote = f.value("remote", false);
      r.filters.push_back(std::move(m));
    }
    if (!r.core.valid()) throw Error("registration has an invalid core id");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad registration record: ") + e.what());
  }
}

}  // namespace ccx
