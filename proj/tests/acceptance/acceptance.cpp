#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <nlohmann/json.hpp>

#include "ccx/cli/config.hpp"
#include "ccx/core/payload.hpp"
#include "ccx/inference/inference.hpp"
#include "ccx/recorder/recorder.hpp"
#include "ccx/runtime/block.hpp"
#include "ccx/runtime/builtin.hpp"
#include "ccx/signaling/client.hpp"
#include "ccx/signaling/server.hpp"
#include "ccx/sim/dwa.hpp"
#include "ccx/sim/scenario.hpp"
#include "ccx/sim/world.hpp"
#include "ccx/transport/loopback.hpp"
#include "ccx/transport/socket_channel.hpp"
#include "ccx/transport/wire.hpp"
#include "dwa_oracle.hpp"
#include "test_support.hpp"

using namespace ccx;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clk = std::chrono::steady_clock;

double seconds_since(Clk::time_point start) { return std::chrono::duration<double>(Clk::now() - start).count(); }

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

FilterDescriptor counter(std::uint32_t id, std::uint32_t dt, Params params = {}) {
  return FilterDescriptor{FilterId{id}, "counter" + std::to_string(id), "source.counter", dt, {}, false,
                          std::move(params)};
}

FilterDescriptor mirror(std::uint32_t id, CoreId source) {
  return FilterDescriptor{FilterId{id}, "mirror" + std::to_string(id), "", 20, {}, true,
                          {{"core", std::to_string(source.value)}}};
}

Outcome tam_oracle() {
  auto start = Clk::now();
  auto diff = test::compare_tam_with_oracle(1, 10'000);
  double s = seconds_since(start);
  if (!diff.empty()) return {false, diff};
  return {s < 10, fmt::format("10000 ops agree with the full-history oracle in {:.2f} s", s)};
}

Outcome tam_concurrency() {
  auto start = Clk::now();
  auto r = test::tam_concurrency_run(1'000'000, 4, 64);
  double s = seconds_since(start);
  return {r.operations >= 1'000'000 && r.checksum_failures == 0 && r.ordering_violations == 0 && s < 60,
          fmt::format("{} ops, {} checksum failures, {} ordering violations, {:.1f} s", r.operations,
                      r.checksum_failures, r.ordering_violations, s)};
}

Outcome wire_conformance() {
  std::mt19937_64 rng(3);
  std::size_t roundtrip_bad = 0;
  for (int i = 0; i < 10'000; ++i) {
    auto f = test::random_wire_frame(rng);
    auto bytes = encode_frame(f);
    auto back = decode_frame(bytes);
    if (!(back == f) || encode_frame(back) != bytes) ++roundtrip_bad;
  }

  auto dir = test::source_dir() / "testdata" / "frames";
  std::ifstream index_file(dir / "index.json");
  if (!index_file) return {false, "no golden index in " + dir.string()};
  auto index = nlohmann::json::parse(index_file);
  const std::map<std::string, MsgType> types = {{"DATA", MsgType::Data},
                                                {"SUBSCRIBE", MsgType::Subscribe},
                                                {"UNSUBSCRIBE", MsgType::Unsubscribe},
                                                {"PING", MsgType::Ping},
                                                {"PONG", MsgType::Pong}};
  std::size_t golden_bad = 0;
  for (const auto& e : index) {
    auto bytes = read_file(dir / e["file"].get<std::string>());
    try {
      auto f = decode_frame(bytes);
      Bytes payload;
      auto hex = e["payload_hex"].get<std::string>();
      for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
        payload.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
      }
      bool ok = f.version == e["version"].get<int>() && f.msg_type == types.at(e["msg_type"].get<std::string>()) &&
                f.core.value == e["core"].get<std::uint64_t>() &&
                f.filter.value == e["filter"].get<std::uint32_t>() && f.t.millis == e["t"].get<std::uint64_t>() &&
                f.payload_kind == e["payload_kind"].get<std::uint16_t>() && f.payload == payload &&
                encode_frame(f) == bytes;
      if (!ok) ++golden_bad;
    } catch (const std::exception&) {
      ++golden_bad;
    }
  }

  std::size_t fuzz_bad = 0;
  for (int i = 0; i < 10'000; ++i) {
    auto bytes = encode_frame(test::random_wire_frame(rng));
    switch (rng() % 7) {
      case 0: bytes.resize(rng() % bytes.size()); break;
      case 1: bytes[rng() % 4] ^= static_cast<std::uint8_t>(1 + rng() % 255); break;
      case 2: bytes[4] = static_cast<std::uint8_t>(2 + rng() % 254); break;
      case 3: bytes.push_back(static_cast<std::uint8_t>(rng())); break;
      case 4: bytes[5] = static_cast<std::uint8_t>(6 + rng() % 250); break;
      case 5: bytes[26] = static_cast<std::uint8_t>(1 + rng() % 255); break;
      default: bytes[28 + rng() % 4] ^= static_cast<std::uint8_t>(1 + rng() % 255); break;
    }
    try {
      decode_frame(bytes);
      ++fuzz_bad;
    } catch (const MalformedFrame&) {
    } catch (...) {
      ++fuzz_bad;
    }
  }
  return {roundtrip_bad == 0 && golden_bad == 0 && fuzz_bad == 0 && index.size() >= 10,
          fmt::format("roundtrip 10000 ({} bad), golden {} ({} bad), mutations 10000 ({} not MalformedFrame)",
                      roundtrip_bad, index.size(), golden_bad, fuzz_bad)};
}

Outcome sampling_adherence() {
  FilterRegistry registry = default_registry();
  LoopbackChannel channel;
  Tam tam;
  DataBlockDescriptor d{CoreId{0x20}, {}, {counter(1, 20), counter(2, 50), counter(3, 100)}};
  auto block = start_datablock(d, registry, tam, channel);
  std::this_thread::sleep_for(10s);
  auto stats = block->stop();
  bool pass = true;
  std::string detail;
  for (auto [id, dt] : {std::pair{1u, 20.0}, {2u, 50.0}, {3u, 100.0}}) {
    const auto* s = stats.find(FilterId{id});
    double expected = 10'000 / dt;
    bool ok = s->state != FilterState::Faulted && std::abs(s->mean_period_ms - dt) <= 0.1 * dt &&
              std::abs(double(s->ticks) - expected) <= 0.1 * expected;
    pass = pass && ok;
    detail += fmt::format("{}dt={} ticks={}/{:.0f} mean={:.2f} ms", detail.empty() ? "" : "; ", dt, s->ticks,
                          expected, s->mean_period_ms);
  }
  return {pass, detail};
}

Outcome discovery_redundancy() {
  FilterRegistry registry = default_registry();
  const CoreId a{0xA1}, b{0xB2};
  std::string detail;
  bool pass = true;
  for (int killed = 0; killed < 3; ++killed) {
    std::vector<std::unique_ptr<SignalingServer>> servers;
    ServerSet set;
    for (int i = 0; i < 3; ++i) {
      servers.push_back(std::make_unique<SignalingServer>(SignalingServerOptions{}));
      set.servers.push_back(servers.back()->address());
    }
    servers[killed]->stop();

    SocketChannel channel;
    Tam tam_a, tam_b;
    RuntimeOptions o;
    o.signaling = set;
    o.signaling_timeout = 500ms;
    o.link_retry = 50ms;
    auto block_a = start_datablock(DataBlockDescriptor{a, {}, {counter(1, 20), mirror(2, b)}}, registry, tam_a,
                                   channel, o);
    auto start = Clk::now();
    auto block_b = start_datablock(DataBlockDescriptor{b, {}, {counter(2, 20), mirror(1, a)}}, registry, tam_b,
                                   channel, o);
    bool linked = test::wait_until(
        [&] {
          return block_a->links_connected() && block_b->links_connected() &&
                 tam_a.has_stream(StreamKey{b, FilterId{2}}) && !tam_a.entries(StreamKey{b, FilterId{2}}).empty() &&
                 tam_b.has_stream(StreamKey{a, FilterId{1}}) && !tam_b.entries(StreamKey{a, FilterId{1}}).empty();
        },
        5000ms);
    double s = seconds_since(start);
    block_b->stop();
    block_a->stop();
    pass = pass && linked && s <= 2.0;
    detail += fmt::format("server {} down: mirrored both ways in {:.2f} s; ", killed, s);
  }

  std::vector<std::unique_ptr<SignalingServer>> servers;
  ServerSet set;
  for (int i = 0; i < 3; ++i) {
    servers.push_back(std::make_unique<SignalingServer>(SignalingServerOptions{}));
    set.servers.push_back(servers.back()->address());
    servers.back()->stop();
  }
  bool all_down = false;
  try {
    SignalingClient(set, 300ms).discover(a);
  } catch (const AllServersUnreachable&) {
    all_down = true;
  }
  bool start_refused = false;
  try {
    SocketChannel channel;
    Tam tam;
    RuntimeOptions o;
    o.signaling = set;
    o.signaling_timeout = 300ms;
    start_datablock(DataBlockDescriptor{a, {}, {counter(1, 20)}}, registry, tam, channel, o);
  } catch (const RegistrationFailed&) {
    start_refused = true;
  }
  pass = pass && all_down && start_refused;
  detail += fmt::format("all down: discover {}, start {}", all_down ? "AllServersUnreachable" : "did not fail",
                        start_refused ? "RegistrationFailed" : "did not fail");
  return {pass, detail};
}

Outcome mirroring_latency() {
  FilterRegistry registry = default_registry();
  const CoreId a{0xA1}, b{0xB2};
  const StreamKey k{a, FilterId{1}};
  bool pass = true;
  std::string detail;
  for (std::int64_t skew : {500, -500}) {
    SocketChannel channel;
    Tam tam_a, tam_b;
    RuntimeOptions oa;
    oa.clock = std::make_shared<SystemClock>(skew);
    auto block_a = start_datablock(DataBlockDescriptor{a, {}, {counter(1, 5)}}, registry, tam_a, channel, oa);
    RuntimeOptions ob;
    auto clock_b = std::make_shared<SystemClock>(0);
    ob.clock = clock_b;
    ob.static_peers[a] = block_a->address();
    auto block_b = start_datablock(DataBlockDescriptor{b, {}, {mirror(1, a)}}, registry, tam_b, channel, ob);

    std::mutex mutex;
    std::vector<std::pair<Timestamp, Timestamp>> seen;  // local frame time, receive time
    auto id = tam_b.observe(k, [&](const StreamFrame& f) {
      auto now = clock_b->now();
      std::lock_guard lock(mutex);
      if (seen.size() < 1000) seen.emplace_back(f.t, now);
    });
    bool enough = test::wait_until(
        [&] {
          std::lock_guard lock(mutex);
          return seen.size() >= 1000;
        },
        30'000ms);
    tam_b.unobserve(id);
    auto stats = block_b->stop();
    block_a->stop();
    if (!enough) return {false, fmt::format("skew {}: only {} frames mirrored", skew, seen.size())};

    const auto* s = stats.find(FilterId{1});
    std::vector<double> latencies;
    std::int64_t worst = 0;
    bool bounded = true;
    for (const auto& [local_t, recv] : seen) {
      auto measured = measure_latency(local_t, recv);
      auto sender_t = static_cast<std::int64_t>(local_t.millis) + s->offset_ms;
      auto truth = static_cast<std::int64_t>(recv.millis) - (sender_t - skew);
      auto error = std::abs(measured - truth);
      worst = std::max(worst, error);
      if (2 * static_cast<std::uint64_t>(error) > s->rtt_ms) bounded = false;
      latencies.push_back(double(measured));
    }
    double med = median(latencies);
    pass = pass && bounded && med <= 5.0;
    detail += fmt::format("{}skew {:+} ms: median {:.1f} ms, offset {} rtt {} ms, max error {} ms",
                          detail.empty() ? "" : "; ", skew, med, s->offset_ms, s->rtt_ms, worst);
  }
  return {pass, detail};
}

std::map<StreamKey, std::vector<Bytes>> replay_derived(const fs::path& dir, const RecordingManifest& manifest) {
  FilterRegistry registry = default_registry();
  auto d = make_replay_datablock(manifest, dir);
  std::uint64_t span = 0;
  for (const auto& s : manifest.streams) {
    auto frames = read_stream_log(dir / s.log_file);
    if (!frames.empty()) span = std::max(span, frames.back().t.millis - frames.front().t.millis);
  }
  Tam tam;
  LoopbackChannel channel;
  RuntimeOptions o;
  o.clock = std::make_shared<ManualClock>(1'000'000);
  o.scheduling = Scheduling::Stepped;
  auto block = start_datablock(d, registry, tam, channel, o);
  std::map<StreamKey, std::vector<Bytes>> out;
  std::vector<Tam::ObserverId> ids;
  for (const auto& f : d.filters) {
    if (f.type_name == "replay") continue;
    auto key = output_key(d, f);
    out[key];
    ids.push_back(tam.observe(key, [&out, key](const StreamFrame& sf) {
      out[key].push_back(encode_frame(make_data_frame(sf)));
    }));
  }
  block->advance_to(Timestamp{1'000'000 + span + 1000});
  for (auto id : ids) tam.unobserve(id);
  block->stop();
  return out;
}

Outcome record_replay() {
  FilterRegistry registry = default_registry();
  auto legged = load_config(test::source_dir() / "etc" / "pipelines" / "legged.conf");
  auto drone = load_config(test::source_dir() / "etc" / "pipelines" / "drone.conf");
  std::erase_if(drone.block.filters, [](const FilterDescriptor& f) { return f.is_remote; });

  test::TempDir dir;
  SocketChannel channel;
  Tam tam_drone, tam;
  auto drone_block = start_datablock(drone.block, registry, tam_drone, channel);

  std::vector<StreamKey> keys;
  for (const auto& f : legged.block.filters) {
    auto key = output_key(legged.block, f);
    std::optional<std::size_t> capacity;
    if (auto it = f.params.find("capacity"); it != f.params.end()) capacity = std::stoul(it->second);
    tam.register_stream(key, capacity);
    keys.push_back(key);
  }
  RecordingManifest manifest;
  {
    Recorder recorder(tam, keys, dir.path(), legged.block);
    RuntimeOptions o;
    o.static_peers[drone.block.core] = drone_block->address();
    auto block = start_datablock(legged.block, registry, tam, channel, o);
    std::this_thread::sleep_for(10s);
    block->stop();
    manifest = recorder.stop();
    if (recorder.failed()) return {false, "recording failed: " + recorder.error()};
  }
  drone_block->stop();

  std::uint64_t recorded = 0;
  for (const auto& s : manifest.streams) recorded += s.frames;
  auto first = replay_derived(dir.path(), manifest);
  auto second = replay_derived(dir.path(), manifest);
  std::size_t derived_frames = 0, non_empty = 0;
  for (const auto& [key, frames] : first) {
    derived_frames += frames.size();
    non_empty += !frames.empty();
  }
  bool identical = first == second;

  std::mt19937_64 rng(7);
  std::size_t cuts = 0, cut_bad = 0;
  test::TempDir scratch;
  for (const auto& s : manifest.streams) {
    auto log = dir.path() / s.log_file;
    auto bytes = read_file(log);
    auto index = scan_index(log);
    auto all = read_stream_log(log);
    if (bytes.empty()) continue;
    for (int i = 0; i < 60; ++i, ++cuts) {
      std::size_t cut = rng() % (bytes.size() + 1);
      auto path = scratch.path() / "cut.ccxl";
      std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(cut));
      std::size_t complete = 0;
      for (std::size_t j = 0; j < index.size(); ++j) {
        std::uint64_t end = j + 1 < index.size() ? index[j + 1].offset : bytes.size();
        if (end <= cut) complete = j + 1;
      }
      auto got = read_stream_log(path);
      if (got.size() != complete || !std::equal(got.begin(), got.end(), all.begin())) ++cut_bad;
    }
  }
  return {identical && non_empty >= 3 && recorded > 0 && cut_bad == 0,
          fmt::format("recorded {} frames in {} streams; replays {} ({} derived frames in {} streams); "
                      "truncation {} cuts, {} wrong",
                      recorded, manifest.streams.size(), identical ? "byte-identical" : "DIFFER", derived_frames,
                      non_empty, cuts, cut_bad)};
}

Outcome inference_shape() {
  std::mt19937_64 rng(8);
  const StreamKey k1{CoreId{0x42}, FilterId{1}}, k2{CoreId{0x42}, FilterId{2}};
  Tam tam;
  tam.register_stream(k1);
  tam.register_stream(k2);
  for (std::uint64_t t = 1; t <= 30; ++t) {
    tam.insert(StreamFrame{k1, Timestamp{t * 10}, encode(ScalarVec{{double(t)}})});
    tam.insert(StreamFrame{k2, Timestamp{t * 10 + 3}, encode(ScalarVec{{double(-t)}})});
  }
  std::size_t bad = 0;
  for (int i = 0; i < 500; ++i) {
    auto tau_i = static_cast<std::uint32_t>(rng() % 9);
    auto tau_o = static_cast<std::uint32_t>(1 + rng() % 8);
    Timestamp at{200 + rng() % 100};
    auto w = assemble_window(tam, {k1, k2}, at, tau_i);
    for (const auto& b : w.branches) bad += b.samples.size() != tau_i + 1;
    auto adapter = make_moving_average_adapter({{"tau_i", std::to_string(tau_i)}, {"tau_o", std::to_string(tau_o)}});
    auto h = adapter->infer(w, 10);
    bad += h.tau_o != tau_o || h.outputs.size() != tau_o;
  }

  std::size_t pairs = 0;
  FilterRegistry registry = default_registry();
  for (std::uint32_t tau_i = 0; tau_i <= 8; ++tau_i) {
    for (std::uint32_t tau_o = 1; tau_o <= 8; ++tau_o, ++pairs) {
      LoopbackChannel channel;
      Tam block_tam;
      RuntimeOptions o;
      o.clock = std::make_shared<ManualClock>(0);
      o.scheduling = Scheduling::Stepped;
      DataBlockDescriptor d{CoreId{0x42}, {},
                            {counter(1, 10, {{"capacity", "256"}}),
                             FilterDescriptor{FilterId{2}, "avg", "inference.moving_average", 50, {k1}, false,
                                              {{"tau_i", std::to_string(tau_i)},
                                               {"tau_o", std::to_string(tau_o)},
                                               {"capacity", "1024"}}}}};
      auto block = start_datablock(d, registry, block_tam, channel, o);
      block->advance_to(Timestamp{2000});
      auto s = *block->stats().find(FilterId{2});
      auto out = block_tam.entries(k2);
      bad += s.ticks == 0 || s.outputs != tau_o * s.ticks || out.size() != s.outputs;
      block->stop();
    }
  }
  return {bad == 0, fmt::format("500 random windows and all {} (tau_i, tau_o) filter runs, {} shape violations",
                                pairs, bad)};
}

Outcome dwa_oracle_check() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  sim::DwaConfig cfg;
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    sim::RobotState s{u(rng) * 3, u(rng) * 3, u(rng) * 3.14159, 0.5 + 0.5 * u(rng), u(rng)};
    std::vector<sim::Obstacle> placed;
    auto grid = test::random_grid(rng, 50, 0.1, s, cfg.robot_radius, &placed);
    double gx = s.x + 5 * u(rng), gy = s.y + 5 * u(rng);
    std::vector<test::OracleCandidate> expected;
    auto [v, w] = test::dwa_oracle(s, gx, gy, grid, cfg, &expected);
    auto got = sim::dwa_plan(s, gx, gy, grid, cfg);
    bool same = got.v == v && got.omega == w && got.candidates.size() == expected.size();
    for (std::size_t i = 0; same && i < expected.size(); ++i) same = got.candidates[i].admissible == expected[i].ok;
    mismatches += !same;
  }

  sim::World world;
  const double body = 0.25;
  for (int i = 0; i < 40; ++i) {
    sim::Obstacle o{10 * u(rng), 10 * u(rng), 0.2 + 0.2 * (u(rng) + 1)};
    if (std::hypot(o.x, o.y) < o.radius + 1.0) continue;
    world.obstacles.push_back(o);
  }
  auto free_point = [&] {
    while (true) {
      double x = 9 * u(rng), y = 9 * u(rng);
      if (sim::obstacle_distance(world, x, y) > 0.8) return std::pair{x, y};
    }
  };
  sim::RobotState state;
  auto goal = free_point();
  std::size_t collisions = 0, goals = 0, recoveries = 0, since_goal = 0;
  double closest = 1e9;
  for (int step = 0; step < 10'000; ++step) {
    auto grid = test::rasterize(world.obstacles, state, 50, 0.1);
    auto plan = sim::dwa_plan(state, goal.first, goal.second, grid, cfg);
    recoveries += plan.recovery;
    state = sim::integrate(state, plan.v, plan.omega, cfg.dt_s);
    state.v = plan.v;
    state.omega = plan.omega;
    double d = sim::obstacle_distance(world, state.x, state.y);
    closest = std::min(closest, d);
    if (d < body) ++collisions;
    if (std::hypot(goal.first - state.x, goal.second - state.y) < 0.3 || ++since_goal > 600) {
      goals += since_goal <= 600;
      since_goal = 0;
      goal = free_point();
    }
  }
  return {mismatches == 0 && collisions == 0,
          fmt::format("200 scenes, {} oracle mismatches; 10000 closed-loop steps, {} collisions, {} goals reached, "
                      "{} recovery steps, closest approach {:.3f} m",
                      mismatches, collisions, goals, recoveries, closest)};
}

Outcome collaborative_perception() {
  auto cfg = load_scenario(test::source_dir() / "scenarios" / "hidden_obstacle.conf");
  auto base = cfg.seed;
  int on_collisions = 0, off_worse = 0, off_trials = 0;
  std::string detail;
  for (std::uint64_t i = 0; i < 4; ++i) {
    cfg.seed = base + i;
    for (double v : cfg.velocities) {
      cfg.mirroring = true;
      auto on = sim::run_trial(cfg, v);
      cfg.mirroring = false;
      auto off = sim::run_trial(cfg, v);
      on_collisions += on.collided;
      ++off_trials;
      off_worse += off.collided || off.rmse.normalized > on.rmse.normalized;
      detail += fmt::format("{}seed {}: on {} ({:.2f} m) / off {} ({:.2f} m)", detail.empty() ? "" : "; ", cfg.seed,
                            on.collided ? "collided" : "clear", on.min_clearance, off.collided ? "collided" : "clear",
                            off.min_clearance);
    }
  }
  return {on_collisions == 0 && off_worse == off_trials, detail};
}

Outcome sampling_rate_trend(Clk::time_point demo_start) {
  auto cfg = load_scenario(test::source_dir() / "scenarios" / "curved.conf");
  auto base = cfg.seed;
  bool lower = true, monotone = true;
  int pair_wins = 0, pairs = 0;
  std::string detail;
  for (std::uint64_t i = 0; i < 4; ++i) {
    cfg.seed = base + i;
    std::map<std::uint32_t, std::vector<double>> rmse;
    for (std::uint32_t dt : {50u, 200u}) {
      cfg.planner_dt_ms = dt;
      for (double v : cfg.velocities) rmse[dt].push_back(sim::run_trial(cfg, v).rmse.normalized);
    }
    double m50 = median(rmse[50]), m200 = median(rmse[200]);
    lower = lower && m50 < m200;
    for (std::size_t j = 0; j < rmse[50].size(); ++j, ++pairs) pair_wins += rmse[50][j] < rmse[200][j];
    for (std::size_t j = 1; j < rmse[50].size(); ++j) monotone = monotone && rmse[50][j] >= rmse[50][j - 1];
    std::string sweep;
    for (double r : rmse[50]) sweep += fmt::format("{}{:.3f}", sweep.empty() ? "" : "/", r);
    detail += fmt::format("seed {}: median {:.3f} vs {:.3f}, sweep {}; ", cfg.seed, m50, m200, sweep);
  }
  double s = seconds_since(demo_start);
  detail += fmt::format("{}/{} single trials lower at 50 ms; demo suite {:.0f} s", pair_wins, pairs, s);
  return {lower && monotone && s < 300, detail};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  Clk::time_point demo_start;
  std::vector<Criterion> criteria = {
      {1, "TAM oracle equivalence", tam_oracle},
      {2, "TAM concurrency", tam_concurrency},
      {3, "Wire conformance", wire_conformance},
      {4, "Sampling adherence", sampling_adherence},
      {5, "Discovery redundancy", discovery_redundancy},
      {6, "Remote mirroring latency", mirroring_latency},
      {7, "Record/replay determinism", record_replay},
      {8, "Inference shape law", inference_shape},
      {9, "DWA oracle", dwa_oracle_check},
      {10, "Collaborative perception effect",
       [&] {
         demo_start = Clk::now();
         return collaborative_perception();
       }},
      {11, "Sampling-rate to RMSE trend", [&] { return sampling_rate_trend(demo_start); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    auto start = Clk::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("{} {:>2} {} ({:.1f} s): {}\n", o.pass ? "PASS" : "FAIL", c.number, c.name,
                             seconds_since(start), o.detail)
              << std::flush;
  }
  return failed == 0 ? 0 : 1;
}
