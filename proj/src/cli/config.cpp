#include "ccx/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ccx/runtime/block.hpp"

namespace ccx {

namespace {

struct Entry {
  std::size_t line = 0;
  std::string key;
  std::string value;
};

struct Section {
  std::size_t line = 0;
  std::string name;
  std::vector<Entry> entries;
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<Section> lex(const std::string& text) {
  std::vector<Section> sections;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(n, "unterminated section header");
      auto name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (name.empty()) throw ParseError(n, "empty section name");
      if (!seen.insert(name).second) throw ParseError(n, "duplicate section [" + name + "]");
      sections.push_back(Section{n, name, {}});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(n, "expected <key> = <value>");
    if (sections.empty()) throw ParseError(n, "key outside of a section");
    Entry e{n, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
    if (e.key.empty()) throw ParseError(n, "empty key");
    for (const auto& other : sections.back().entries) {
      if (other.key == e.key) throw ParseError(n, "duplicate key " + e.key);
    }
    sections.back().entries.push_back(std::move(e));
  }
  return sections;
}

template <typename T>
T parse_number(const Entry& e) {
  T v{};
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end) throw ParseError(e.line, e.key + ": invalid number '" + e.value + "'");
  return v;
}

bool parse_bool(const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw ParseError(e.line, e.key + ": expected true or false");
}

nlohmann::json parse_json(const Entry& e) {
  try {
    return nlohmann::json::parse(e.value);
  } catch (const nlohmann::json::exception&) {
    throw ParseError(e.line, e.key + ": invalid list '" + e.value + "'");
  }
}

std::vector<std::string> parse_string_list(const Entry& e) {
  auto j = parse_json(e);
  if (!j.is_array()) throw ParseError(e.line, e.key + ": expected a list");
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) throw ParseError(e.line, e.key + ": list items must be strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<double> parse_number_list(const Entry& e, const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError(e.line, e.key + ": expected a list");
  std::vector<double> out;
  for (const auto& item : j) {
    if (!item.is_number()) throw ParseError(e.line, e.key + ": list items must be numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

void parse_core(const Section& s, PipelineConfig& cfg) {
  bool has_id = false;
  for (const auto& e : s.entries) {
    if (e.key == "ID") {
      cfg.block.core = CoreId{parse_number<std::uint64_t>(e)};
      has_id = true;
    } else if (e.key == "Signaling") {
      cfg.signaling = parse_string_list(e);
    } else if (e.key == "TamCapacity") {
      cfg.tam_capacity = parse_number<std::uint32_t>(e);
    } else if (e.key == "Listen") {
      cfg.listen = e.value;
    } else if (e.key == "RecordDir") {
      cfg.record_dir = e.value;
    } else if (e.key == "Replay") {
      cfg.replay = e.value;
    } else {
      throw ParseError(e.line, "unknown key " + e.key + " in [Core]");
    }
  }
  if (!has_id) throw ParseError(s.line, "[Core] requires ID");
}

FilterDescriptor parse_filter(const Section& s) {
  FilterDescriptor f;
  std::string_view id_text = std::string_view(s.name).substr(7);
  {
    Entry id_entry{s.line, "section id", std::string(id_text)};
    f.id = FilterId{parse_number<std::uint32_t>(id_entry)};
  }
  bool has_name = false, has_type = false, has_dt = false;
  for (const auto& e : s.entries) {
    if (e.key == "Name") {
      f.name = e.value;
      has_name = true;
    } else if (e.key == "Type") {
      f.type_name = e.value;
      has_type = true;
    } else if (e.key == "dt") {
      f.dt_ms = parse_number<std::uint32_t>(e);
      has_dt = true;
    } else if (e.key == "IsRemote") {
      f.is_remote = parse_bool(e);
    } else if (e.key == "Inputs") {
      for (const auto& k : parse_string_list(e)) {
        try {
          f.inputs.push_back(parse_stream_key(k));
        } catch (const Error& err) {
          throw ParseError(e.line, err.what());
        }
      }
    } else if (e.key.rfind("Param.", 0) == 0 && e.key.size() > 6) {
      f.params[e.key.substr(6)] = e.value;
    } else {
      throw ParseError(e.line, "unknown key " + e.key + " in [" + s.name + "]");
    }
  }
  if (!has_name) throw ParseError(s.line, "[" + s.name + "] requires Name");
  if (!has_type) throw ParseError(s.line, "[" + s.name + "] requires Type");
  if (!has_dt) throw ParseError(s.line, "[" + s.name + "] requires dt");
  return f;
}

std::string json_list(const std::vector<std::string>& items) { return nlohmann::json(items).dump(-1, ' ', false); }

std::string with_spaces(std::string list) {
  std::string out;
  bool quoted = false;
  for (std::size_t i = 0; i < list.size(); ++i) {
    char c = list[i];
    out += c;
    if (quoted && c == '\\' && i + 1 < list.size()) {
      out += list[++i];
    } else if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out += ' ';
    }
  }
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  bool has_core = false;
  for (const auto& s : lex(text)) {
    if (s.name == "Core") {
      parse_core(s, cfg);
      has_core = true;
    } else if (s.name.rfind("Filter_", 0) == 0) {
      cfg.block.filters.push_back(parse_filter(s));
    } else {
      throw ParseError(s.line, "unknown section [" + s.name + "]");
    }
  }
  if (!has_core) throw ParseError(1, "missing [Core] section");
  return cfg;
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "[Core]\n";
  out << "ID = " << cfg.block.core.value << '\n';
  out << "Signaling = " << with_spaces(json_list(cfg.signaling)) << '\n';
  if (cfg.tam_capacity) out << "TamCapacity = " << *cfg.tam_capacity << '\n';
  if (cfg.listen) out << "Listen = " << *cfg.listen << '\n';
  if (cfg.record_dir) out << "RecordDir = " << *cfg.record_dir << '\n';
  if (cfg.replay) out << "Replay = " << *cfg.replay << '\n';
  for (const auto& f : cfg.block.filters) {
    out << "\n[Filter_" << f.id.value << "]\n";
    out << "Name = " << f.name << '\n';
    out << "Type = " << f.type_name << '\n';
    out << "dt = " << f.dt_ms << '\n';
    out << "IsRemote = " << (f.is_remote ? "true" : "false") << '\n';
    std::vector<std::string> inputs;
    for (const auto& k : f.inputs) inputs.push_back(to_string(k));
    out << "Inputs = " << with_spaces(json_list(inputs)) << '\n';
    for (const auto& [k, v] : f.params) out << "Param." << k << " = " << v << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigNotFound(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  auto cfg = parse_config(read_text_file(path));
  auto violations = validate_datablock(cfg.block);
  if (!violations.empty()) throw InvalidDataBlock(std::move(violations));
  return cfg;
}

sim::ScenarioConfig parse_scenario(const std::string& text) {
  sim::ScenarioConfig cfg;
  bool has_scenario = false;
  for (const auto& s : lex(text)) {
    if (s.name == "Scenario") {
      has_scenario = true;
      for (const auto& e : s.entries) {
        if (e.key == "Seed") {
          cfg.seed = parse_number<std::uint64_t>(e);
        } else if (e.key == "Reference") {
          auto j = parse_json(e);
          if (!j.is_array()) throw ParseError(e.line, "Reference: expected a list of [x, y]");
          cfg.reference.clear();
          for (const auto& p : j) {
            auto xy = parse_number_list(e, p);
            if (xy.size() != 2) throw ParseError(e.line, "Reference: points are [x, y]");
            cfg.reference.emplace_back(xy[0], xy[1]);
          }
          if (cfg.reference.size() < 2) throw ParseError(e.line, "Reference: needs at least two points");
        } else if (e.key == "Waypoints") {
          cfg.random_waypoints = parse_number<int>(e);
        } else if (e.key == "WaypointAmplitude") {
          cfg.waypoint_amplitude = parse_number<double>(e);
        } else if (e.key == "Obstacles") {
          auto j = parse_json(e);
          if (!j.is_array()) throw ParseError(e.line, "Obstacles: expected a list");
          for (const auto& o : j) {
            if (!o.is_array() || o.size() < 3 || o.size() > 4) {
              throw ParseError(e.line, "Obstacles: entries are [x, y, radius] or [x, y, radius, aerial_only]");
            }
            sim::Obstacle ob;
            try {
              ob.x = o[0].get<double>();
              ob.y = o[1].get<double>();
              ob.radius = o[2].get<double>();
              if (o.size() == 4) ob.aerial_only = o[3].get<bool>();
            } catch (const nlohmann::json::exception&) {
              throw ParseError(e.line, "Obstacles: bad entry " + o.dump());
            }
            cfg.obstacles.push_back(ob);
          }
        } else if (e.key == "RandomObstacles") {
          cfg.random_obstacles = parse_number<int>(e);
        } else if (e.key == "LateralMin") {
          cfg.random_lateral_min = parse_number<double>(e);
        } else if (e.key == "LateralMax") {
          cfg.random_lateral_max = parse_number<double>(e);
        } else if (e.key == "HiddenObstacles") {
          cfg.hidden_obstacles = parse_number<int>(e);
        } else if (e.key == "Velocities") {
          cfg.velocities = parse_number_list(e, parse_json(e));
          if (cfg.velocities.empty()) throw ParseError(e.line, "Velocities: empty list");
        } else if (e.key == "Accel") {
          cfg.accel = parse_number<double>(e);
        } else if (e.key == "PlannerDt") {
          cfg.planner_dt_ms = parse_number<std::uint32_t>(e);
        } else if (e.key == "PerceptionDt") {
          cfg.perception_dt_ms = parse_number<std::uint32_t>(e);
        } else if (e.key == "Mirroring") {
          cfg.mirroring = parse_bool(e);
        } else if (e.key == "Lead") {
          cfg.lead_m = parse_number<double>(e);
        } else if (e.key == "Settle") {
          cfg.settle_s = parse_number<double>(e);
        } else if (e.key == "RobotRadius") {
          cfg.robot_radius = parse_number<double>(e);
        } else if (e.key == "Transport") {
          if (e.value != "loopback" && e.value != "socket") {
            throw ParseError(e.line, "Transport: expected loopback or socket");
          }
          cfg.transport = e.value;
        } else {
          throw ParseError(e.line, "unknown key " + e.key + " in [Scenario]");
        }
      }
    } else if (s.name == "Dwa") {
      auto& d = cfg.dwa;
      for (const auto& e : s.entries) {
        if (e.key == "VMax") {
          d.v_max = parse_number<double>(e);
        } else if (e.key == "OmegaMax") {
          d.omega_max = parse_number<double>(e);
        } else if (e.key == "AMax") {
          d.a_max = parse_number<double>(e);
        } else if (e.key == "AlphaMax") {
          d.alpha_max = parse_number<double>(e);
        } else if (e.key == "Horizon") {
          d.horizon_s = parse_number<double>(e);
        } else if (e.key == "VSamples") {
          d.v_samples = parse_number<int>(e);
        } else if (e.key == "OmegaSamples") {
          d.omega_samples = parse_number<int>(e);
        } else if (e.key == "WeightHeading") {
          d.weight_heading = parse_number<double>(e);
        } else if (e.key == "WeightClearance") {
          d.weight_clearance = parse_number<double>(e);
        } else if (e.key == "WeightVelocity") {
          d.weight_velocity = parse_number<double>(e);
        } else if (e.key == "RobotRadius") {
          d.robot_radius = parse_number<double>(e);
        } else if (e.key == "ClearanceCap") {
          d.clearance_cap_m = parse_number<double>(e);
        } else {
          throw ParseError(e.line, "unknown key " + e.key + " in [Dwa]");
        }
      }
    } else {
      throw ParseError(s.line, "unknown section [" + s.name + "]");
    }
  }
  if (!has_scenario) throw ParseError(1, "missing [Scenario] section");
  return cfg;
}

sim::ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text_file(path)); }

}  // namespace ccx
