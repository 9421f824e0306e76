#include "ccx/cli/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ccx/cli/config.hpp"
#include "ccx/cli/console.hpp"
#include "ccx/recorder/recorder.hpp"
#include "ccx/runtime/builtin.hpp"
#include "ccx/signaling/client.hpp"
#include "ccx/signaling/server.hpp"
#include "ccx/sim/scenario.hpp"
#include "ccx/transport/socket_channel.hpp"

namespace ccx {

namespace fs = std::filesystem;

std::atomic_bool& interrupt_flag() {
  static std::atomic_bool flag{false};
  return flag;
}

std::vector<std::string> split_server_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    auto item = text.substr(pos, comma - pos);
    auto b = item.find_first_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
    pos = comma + 1;
  }
  return out;
}

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Lines typed on the console, read on a detached thread so a blocked read
/// never holds up shutdown.
struct LineQueue {
  std::mutex mutex;
  std::deque<std::string> lines;
  bool closed = false;
};

std::shared_ptr<LineQueue> read_lines(std::istream& in) {
  auto q = std::make_shared<LineQueue>();
  std::thread([q, &in] {
    std::string line;
    while (std::getline(in, line)) {
      std::lock_guard lock(q->mutex);
      q->lines.push_back(line);
    }
    std::lock_guard lock(q->mutex);
    q->closed = true;
  }).detach();
  return q;
}

/// Serves the console until `q`, an interrupt or the optional duration.
void serve(RunningBlock& block, CliIo io, std::optional<double> duration_s, bool console) {
  Console con(block, io.out);
  std::shared_ptr<LineQueue> lines;
  if (console) {
    io.out << "console: <filter id> | t | q\n" << std::flush;
    lines = read_lines(io.in);
  }
  auto start = std::chrono::steady_clock::now();
  while (!interrupt_flag().load()) {
    if (duration_s &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= *duration_s) {
      return;
    }
    if (lines) {
      std::deque<std::string> batch;
      {
        std::lock_guard lock(lines->mutex);
        batch.swap(lines->lines);
      }
      for (const auto& line : batch) {
        if (!con.handle(line)) return;
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

std::vector<std::string> signaling_servers(std::vector<std::string> configured) {
  if (const char* env = std::getenv("CCX_SIGNALING")) return split_server_list(env);
  return configured;
}

void print_stats(std::ostream& out, const RunStats& stats) {
  for (const auto& f : stats.filters) {
    out << fmt::format("  filter {:>4} {:<20} {:<8} ticks={} skipped={} outputs={}", f.id.value, f.name,
                       state_name(f.state), f.ticks, f.skipped, f.outputs);
    if (f.is_remote) out << fmt::format(" mirrored={} duplicates={}", f.mirrored, f.duplicates);
    if (!f.fault.empty()) out << " fault=\"" << f.fault << '"';
    out << '\n';
  }
}

struct HostedBlock {
  DataBlockDescriptor descriptor;
  std::vector<std::string> signaling;
  std::size_t tam_capacity = 64;
  std::string listen = "127.0.0.1:0";
  std::optional<fs::path> record_dir;
};

int host(const HostedBlock& h, CliIo io, std::optional<double> duration_s, bool console) {
  Tam tam(h.tam_capacity);
  SocketChannel channel;
  auto registry = default_registry();

  std::unique_ptr<Recorder> recorder;
  if (h.record_dir) {
    std::vector<StreamKey> keys;
    for (const auto& f : h.descriptor.filters) {
      auto key = output_key(h.descriptor, f);
      std::optional<std::size_t> capacity;
      if (auto it = f.params.find("capacity"); it != f.params.end()) capacity = std::stoul(it->second);
      tam.register_stream(key, capacity);
      keys.push_back(key);
    }
    recorder = std::make_unique<Recorder>(tam, keys, *h.record_dir, h.descriptor);
  }

  RuntimeOptions options;
  options.signaling.servers = h.signaling;
  options.listen = h.listen;
  auto block = start_datablock(h.descriptor, registry, tam, channel, options);
  io.out << fmt::format("core {} serving {} filters on {}\n", h.descriptor.core.value, h.descriptor.filters.size(),
                        block->address())
         << std::flush;

  serve(*block, io, duration_s, console);

  auto stats = block->stop();
  io.out << "stopped\n";
  print_stats(io.out, stats);
  if (recorder) {
    auto manifest = recorder->stop();
    if (recorder->failed()) {
      io.err << "ccx: recording failed: " << recorder->error() << '\n';
      return kExitFatal;
    }
    std::uint64_t total = 0;
    for (const auto& s : manifest.streams) total += s.frames;
    io.out << fmt::format("recorded {} frames in {} streams to {}\n", total, manifest.streams.size(),
                          h.record_dir->string());
  }
  return kExitOk;
}

RecordingManifest load_recording(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("no recording directory " + dir.string());
  return load_manifest(dir);
}

int cmd_run(const fs::path& config_path, const std::string& record, std::optional<double> duration, bool console,
            CliIo io) {
  PipelineConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ParseError& e) {
    throw UsageError(config_path.string() + ":" + std::to_string(e.line()) + ": " + e.reason());
  } catch (const ConfigNotFound& e) {
    throw UsageError(e.what());
  } catch (const InvalidDataBlock& e) {
    std::string msg = config_path.string() + ": invalid DataBlock";
    for (const auto& v : e.violations()) msg += "\n  " + v;
    throw UsageError(msg);
  }
  HostedBlock h;
  h.descriptor = cfg.block;
  if (cfg.replay) h.descriptor = make_replay_datablock(load_recording(*cfg.replay), *cfg.replay);
  h.signaling = signaling_servers(cfg.signaling);
  h.tam_capacity = cfg.tam_capacity.value_or(64);
  if (cfg.listen) h.listen = *cfg.listen;
  if (!record.empty()) {
    h.record_dir = record;
  } else if (cfg.record_dir) {
    h.record_dir = *cfg.record_dir;
  }
  return host(h, io, duration, console);
}

int cmd_replay(const fs::path& dir, double speed, bool loop, const std::string& listen, std::optional<double> duration,
               bool console, CliIo io) {
  if (!(speed > 0)) throw UsageError("--speed must be positive");
  auto manifest = load_recording(dir);
  HostedBlock h;
  h.descriptor = make_replay_datablock(manifest, dir, speed, loop);
  h.signaling = signaling_servers({});
  h.listen = listen;
  return host(h, io, duration, console);
}

int cmd_signal(const std::string& bind, std::optional<std::uint32_t> ttl, const std::string& ws,
               std::optional<double> duration, CliIo io) {
  SignalingServerOptions options;
  options.bind = bind;
  options.ws_bind = ws;
  options.ttl_s = ttl;
  options.channel = std::make_shared<SocketChannel>();
  SignalingServer server(options);
  io.out << "signaling on " << server.address();
  if (auto w = server.ws_address()) io.out << ", browser endpoint ws://" << *w;
  io.out << '\n' << std::flush;
  auto start = std::chrono::steady_clock::now();
  while (!interrupt_flag().load()) {
    if (duration && std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= *duration) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  return kExitOk;
}

int cmd_demo(const fs::path& scenario_path, int trials, const std::string& csv, std::optional<std::uint32_t> planner_dt,
             std::optional<bool> mirroring, CliIo io) {
  sim::ScenarioConfig cfg;
  try {
    cfg = load_scenario(scenario_path);
  } catch (const ParseError& e) {
    throw UsageError(scenario_path.string() + ":" + std::to_string(e.line()) + ": " + e.reason());
  } catch (const ConfigNotFound& e) {
    throw UsageError(e.what());
  }
  if (trials < 1) throw UsageError("--trials must be >= 1");
  if (planner_dt) cfg.planner_dt_ms = *planner_dt;
  if (mirroring) cfg.mirroring = *mirroring;

  std::vector<sim::TrialResult> results;
  auto base_seed = cfg.seed;
  io.out << fmt::format("{:>6} {:>8} {:>6} {:>9} {:>10} {:>10} {:>9}\n", "seed", "velocity", "dt", "mirroring",
                        "rmse", "rmse_norm", "collided");
  for (int i = 0; i < trials; ++i) {
    cfg.seed = base_seed + static_cast<std::uint64_t>(i);
    for (double v : cfg.velocities) {
      auto r = sim::run_trial(cfg, v);
      io.out << fmt::format("{:>6} {:>8.2f} {:>6} {:>9} {:>10.4f} {:>10.4f} {:>9}\n", r.seed, r.velocity,
                            r.planner_dt_ms, r.mirroring ? "on" : "off", r.rmse.raw, r.rmse.normalized,
                            r.collided ? "yes" : "no")
             << std::flush;
      results.push_back(std::move(r));
    }
  }
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw Error("cannot write " + csv);
    sim::write_csv(out, results);
  }
  return kExitOk;
}

int cmd_inspect(const fs::path& dir, CliIo io) {
  auto m = load_recording(dir);
  io.out << fmt::format("recording {} (format {})\n", dir.string(), m.format_version);
  io.out << fmt::format("core {} start_t {} filters {}\n", m.datablock.core.value, m.start_t.millis,
                        m.datablock.filters.size());
  for (const auto& f : m.datablock.filters) {
    io.out << fmt::format("  filter {:>4} {:<20} {:<24} dt={}{}\n", f.id.value, f.name, f.type_name, f.dt_ms,
                          f.is_remote ? " remote" : "");
  }
  std::uint64_t total = 0;
  for (const auto& s : m.streams) {
    auto frames = read_stream_log(dir / s.log_file);
    std::string span = frames.empty() ? "-" : fmt::format("{}..{}", frames.front().t.millis, frames.back().t.millis);
    io.out << fmt::format("  stream {:<24} frames={:<8} t={} {}\n", to_string(s.key), frames.size(), span,
                          s.log_file);
    total += frames.size();
  }
  io.out << fmt::format("total frames {}\n", total);
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, CliIo io) {
  CLI::App app{"Decentralized robotics pipeline runtime"};
  app.name("ccx");
  app.require_subcommand(1);
  app.set_version_flag("--version", "ccx 0.1.0");

  std::optional<double> duration;
  bool no_console = false;

  auto* run = app.add_subcommand("run", "Run the DataBlock of a pipeline file");
  std::string run_config, run_record;
  run->add_option("config", run_config, "Pipeline file")->required();
  run->add_option("--record", run_record, "Record every datastream to this directory");
  run->add_option("--duration", duration, "Stop after this many seconds");
  run->add_flag("--no-console", no_console, "Do not read console commands");

  auto* replay = app.add_subcommand("replay", "Replay a recording as a live DataBlock");
  std::string replay_dir, replay_listen = "127.0.0.1:0";
  double speed = 1.0;
  bool loop = false;
  replay->add_option("dir", replay_dir, "Recording directory")->required();
  replay->add_option("--speed", speed, "Playback speed factor");
  replay->add_flag("--loop", loop, "Restart at the end of the recording");
  replay->add_option("--listen", replay_listen, "Stream server address");
  replay->add_option("--duration", duration, "Stop after this many seconds");
  replay->add_flag("--no-console", no_console, "Do not read console commands");

  auto* signal = app.add_subcommand("signal", "Run a signaling server");
  std::string bind, ws;
  std::optional<std::uint32_t> ttl;
  signal->add_option("--bind", bind, "host:port to listen on")->required();
  signal->add_option("--ttl", ttl, "Registration lifetime in seconds (overrides clients)");
  signal->add_option("--ws", ws, "host:port of the browser (WebSocket) endpoint");
  signal->add_option("--duration", duration, "Stop after this many seconds");

  auto* demo = app.add_subcommand("demo", "Run the two-robot simulation");
  std::string scenario, csv;
  int trials = 1;
  std::optional<std::uint32_t> planner_dt;
  std::optional<bool> mirroring;
  demo->add_option("scenario", scenario, "Scenario file")->required();
  demo->add_option("--trials", trials, "Seeds to run, starting at the scenario seed");
  demo->add_option("--csv", csv, "Write one row per trial");
  demo->add_option("--planner-dt", planner_dt, "Planner period in ms");
  demo->add_option("--mirroring", mirroring, "Mirror the drone's view (true|false)");

  auto* inspect = app.add_subcommand("inspect", "Print a recording's manifest and frame counts");
  std::string inspect_dir;
  inspect->add_option("dir", inspect_dir, "Recording directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, io.out, io.err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_config, run_record, duration, !no_console, io);
    if (*replay) return cmd_replay(replay_dir, speed, loop, replay_listen, duration, !no_console, io);
    if (*signal) return cmd_signal(bind, ttl, ws, duration, io);
    if (*demo) return cmd_demo(scenario, trials, csv, planner_dt, mirroring, io);
    if (*inspect) return cmd_inspect(inspect_dir, io);
  } catch (const UsageError& e) {
    io.err << "ccx: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    io.err << "ccx: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitUsage;
}

}  // namespace ccx
