#include "ccx/sim/scenario.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "ccx/inference/inference.hpp"
#include "ccx/recorder/recorder.hpp"
#include "ccx/runtime/builtin.hpp"
#include "ccx/signaling/server.hpp"
#include "ccx/transport/loopback.hpp"
#include "ccx/transport/socket_channel.hpp"

namespace ccx::sim {

namespace {

constexpr FilterId kCameraA{1}, kSegA{2}, kSegB{5}, kPoseA{6}, kMap{7}, kPlanner{8}, kGoal{9}, kActuator{10};
constexpr FilterId kCameraB{11}, kPoseB{12}, kDiag{200};
constexpr double kCellSize = 0.1;
constexpr double kCameraAhead = 1.6;

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::size_t robot_index(const FilterContext& ctx) {
  auto r = ctx.param("robot", "a");
  if (r == "a") return 0;
  if (r == "b") return 1;
  throw Error("robot must be a or b");
}

class CameraFilter final : public FilterImpl {
 public:
  explicit CameraFilter(std::shared_ptr<SimContext> sim) : sim_(std::move(sim)) {}
  void init(const FilterContext& ctx) override {
    robot_ = robot_index(ctx);
    width_ = static_cast<std::uint16_t>(ctx.param_int("width", 32));
    height_ = static_cast<std::uint16_t>(ctx.param_int("height", 32));
    ahead_ = ctx.param_double("ahead", 0.0);
    cell_ = ctx.param_double("cell_size", kCellSize);
    aerial_ = ctx.param("aerial", "false") == "true";
    seed_ = static_cast<std::uint64_t>(ctx.param_int("seed", 1));
  }
  FilterOutput process(const SyncTuple&, Timestamp now) override {
    std::lock_guard lock(sim_->mutex);
    const auto& s = sim_->bodies.at(robot_).state;
    return emit(now, encode(render_view(sim_->world, s.x + ahead_ * std::cos(s.theta), s.y + ahead_ * std::sin(s.theta),
                                        width_, height_, cell_, aerial_, seed_)));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::ImageRaw; }

 private:
  std::shared_ptr<SimContext> sim_;
  std::size_t robot_ = 0;
  std::uint16_t width_ = 32, height_ = 32;
  double ahead_ = 0, cell_ = kCellSize;
  bool aerial_ = false;
  std::uint64_t seed_ = 1;
};

class PoseFilter final : public FilterImpl {
 public:
  explicit PoseFilter(std::shared_ptr<SimContext> sim) : sim_(std::move(sim)) {}
  void init(const FilterContext& ctx) override { robot_ = robot_index(ctx); }
  FilterOutput process(const SyncTuple&, Timestamp now) override {
    std::lock_guard lock(sim_->mutex);
    const auto& s = sim_->bodies.at(robot_).state;
    return emit(now, encode(Pose2D{s.x, s.y, s.theta}));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::Pose2D; }

 private:
  std::shared_ptr<SimContext> sim_;
  std::size_t robot_ = 0;
};

// Keeps one persistent world-cell layer per (grid, pose) input pair and emits a
// robot-centric window around the first pose; a cell takes the max over layers.
class MapMergeFilter final : public FilterImpl {
 public:
  void init(const FilterContext& ctx) override {
    tam_ = &ctx.tam;
    inputs_ = ctx.descriptor.inputs;
    if (inputs_.size() < 2 || inputs_.size() % 2) throw Error("map.merge expects (grid, pose) input pairs");
    width_ = static_cast<std::uint16_t>(ctx.param_int("width", 80));
    height_ = static_cast<std::uint16_t>(ctx.param_int("height", 80));
    cell_ = ctx.param_double("cell_size", kCellSize);
    std::stringstream ss(ctx.param("ahead", ""));
    for (std::string item; std::getline(ss, item, ',');) ahead_.push_back(std::stod(item));
    ahead_.resize(inputs_.size() / 2, 0.0);
    last_.assign(inputs_.size() / 2, Timestamp{0});
    layers_.resize(inputs_.size() / 2);
  }

  FilterOutput process(const SyncTuple& in, Timestamp now) override {
    for (std::size_t i = 0; i + 1 < inputs_.size(); i += 2) {
      const auto* g = in.find(inputs_[i]);
      if (!g || g->t <= last_[i / 2]) continue;
      Pose2D pose;
      try {
        pose = decode_pose2d(tam_->query_at_or_before(inputs_[i + 1], g->t).payload);
      } catch (const NoSampleAvailable&) {
        continue;
      }
      last_[i / 2] = g->t;
      integrate_grid(layers_[i / 2], decode_grid(g->payload), pose, ahead_[i / 2]);
    }
    const auto* p = in.find(inputs_[1]);
    auto self = decode_pose2d(p->payload);
    OccupancyGrid out{width_, height_, static_cast<float>(cell_), Bytes(std::size_t{width_} * height_)};
    double ox = self.x - width_ * cell_ / 2, oy = self.y - height_ * cell_ / 2;
    for (std::uint16_t r = 0; r < height_; ++r) {
      for (std::uint16_t c = 0; c < width_; ++c) {
        auto key = cell_key(ox + (c + 0.5) * cell_, oy + (r + 0.5) * cell_);
        std::uint8_t v = 0;
        for (const auto& layer : layers_) {
          if (auto it = layer.find(key); it != layer.end()) v = std::max(v, it->second);
        }
        out.cells[std::size_t{r} * width_ + c] = v;
      }
    }
    return emit(now, encode(out));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::OccupancyGrid; }

 private:
  std::int64_t cell_key(double x, double y) const {
    auto i = static_cast<std::int64_t>(std::floor(x / cell_));
    auto j = static_cast<std::int64_t>(std::floor(y / cell_));
    return (i << 32) ^ (j & 0xFFFFFFFF);
  }

  using Layer = std::unordered_map<std::int64_t, std::uint8_t>;

  void integrate_grid(Layer& layer, const OccupancyGrid& g, const Pose2D& pose, double ahead) {
    auto [ox, oy] = view_origin(pose.x + ahead * std::cos(pose.theta), pose.y + ahead * std::sin(pose.theta), g.width,
                                g.height, g.cell_size);
    for (std::uint16_t r = 0; r < g.height; ++r) {
      for (std::uint16_t c = 0; c < g.width; ++c) {
        layer[cell_key(ox + (c + 0.5) * g.cell_size, oy + (r + 0.5) * g.cell_size)] = g.at(c, r);
      }
    }
  }

  const Tam* tam_ = nullptr;
  std::vector<StreamKey> inputs_;
  std::vector<double> ahead_;
  std::vector<Timestamp> last_;
  std::uint16_t width_ = 80, height_ = 80;
  double cell_ = kCellSize;
  std::vector<Layer> layers_;
};

// Tracks the scenario reference: the goal is a carrot ahead of the reference
// progress and v_max follows an along-track P controller. A COMMAND with
// goal_x/goal_y on Param.goal_stream overrides the carrot.
class PlannerFilter final : public FilterImpl {
 public:
  explicit PlannerFilter(std::shared_ptr<SimContext> sim) : sim_(std::move(sim)) {}

  void init(const FilterContext& ctx) override {
    tam_ = &ctx.tam;
    if (ctx.descriptor.inputs.size() != 2) throw Error("planner.dwa expects inputs (grid, pose)");
    grid_key_ = ctx.descriptor.inputs[0];
    pose_key_ = ctx.descriptor.inputs[1];
    if (auto g = ctx.param("goal_stream", ""); !g.empty()) goal_key_ = parse_stream_key(g);
    auto& d = cfg_;
    d.v_max = ctx.param_double("v_cap", 2.5);
    d.omega_max = ctx.param_double("omega_max", d.omega_max);
    d.a_max = ctx.param_double("a_max", d.a_max);
    d.alpha_max = ctx.param_double("alpha_max", d.alpha_max);
    d.horizon_s = ctx.param_double("horizon_s", d.horizon_s);
    d.v_samples = static_cast<int>(ctx.param_int("v_samples", d.v_samples));
    d.omega_samples = static_cast<int>(ctx.param_int("omega_samples", d.omega_samples));
    d.weight_heading = ctx.param_double("weight_heading", d.weight_heading);
    d.weight_clearance = ctx.param_double("weight_clearance", d.weight_clearance);
    d.weight_velocity = ctx.param_double("weight_velocity", d.weight_velocity);
    d.robot_radius = ctx.param_double("robot_radius", d.robot_radius);
    d.dt_s = ctx.descriptor.dt_ms / 1000.0;
    v_cap_ = d.v_max;
    gain_ = ctx.param_double("track_gain", 1.0);
    validate(d);
  }

  FilterOutput process(const SyncTuple& in, Timestamp now) override {
    const auto* g = in.find(grid_key_);
    auto grid = decode_grid(g->payload);
    auto pose = decode_pose2d(tam_->query_at_or_before(pose_key_, g->t).payload);
    RobotState state{pose.x, pose.y, pose.theta, v_, omega_};

    DwaConfig cfg = cfg_;
    double gx = 0, gy = 0;
    std::optional<std::pair<double, double>> commanded;
    if (goal_key_) {
      try {
        auto cmd = decode_command(tam_->query_at_or_before(*goal_key_, now).payload);
        commanded = std::pair{std::stod(cmd.fields.at("goal_x")), std::stod(cmd.fields.at("goal_y"))};
      } catch (const NoSampleAvailable&) {
      }
    }
    {
      std::lock_guard lock(sim_->mutex);
      if (commanded) {
        std::tie(gx, gy) = *commanded;
        cfg.v_max = std::min(v_cap_, sim_->speed);
      } else {
        const auto& path = *sim_->path;
        double tau = static_cast<double>(now.millis - sim_->t_start.millis) / 1000.0;
        double s_ref = profile_distance(path.length(), sim_->speed, sim_->accel, tau);
        double v_ref = (profile_distance(path.length(), sim_->speed, sim_->accel, tau + 0.05) - s_ref) / 0.05;
        double s_robot = path.project(pose.x, pose.y);
        cfg.v_max = std::clamp(v_ref + gain_ * (s_ref - s_robot), 0.0, std::min(v_cap_, 1.3 * sim_->speed + 0.2));
        double lookahead = cfg.v_max * cfg.horizon_s + 0.5;
        double s_goal = std::max(s_ref, s_robot) + lookahead;
        if (s_goal > path.length()) {
          // Past the end: aim beyond the final vertex along the last heading.
          auto [ex, ey] = path.at(path.length());
          double h = path.heading_at(path.length());
          double extra = s_goal - path.length();
          gx = ex + extra * std::cos(h);
          gy = ey + extra * std::sin(h);
        } else {
          std::tie(gx, gy) = path.at(s_goal);
        }
      }
    }
    auto plan = dwa_plan(state, gx, gy, grid, cfg);
    if (plan.recovery) {
      std::lock_guard lock(sim_->mutex);
      sim_->recovery_used = true;
    }
    v_ = plan.v;
    omega_ = plan.omega;
    return emit(now, encode(ScalarVec{{plan.v, plan.omega, plan.recovery ? 1.0 : 0.0}}));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::ScalarVec; }

 private:
  std::shared_ptr<SimContext> sim_;
  const Tam* tam_ = nullptr;
  StreamKey grid_key_, pose_key_;
  std::optional<StreamKey> goal_key_;
  DwaConfig cfg_;
  double v_cap_ = 2.5;
  double gain_ = 1.0;
  double v_ = 0, omega_ = 0;
};

class ActuatorFilter final : public FilterImpl {
 public:
  explicit ActuatorFilter(std::shared_ptr<SimContext> sim) : sim_(std::move(sim)) {}
  void init(const FilterContext& ctx) override { robot_ = robot_index(ctx); }
  FilterOutput process(const SyncTuple& in, Timestamp now) override {
    if (in.samples.empty()) return {};
    auto cmd = decode_scalar_vec(in.samples.front().payload);
    if (cmd.values.size() < 2) throw Error("actuator expects [v, omega]");
    {
      std::lock_guard lock(sim_->mutex);
      sim_->commands.at(robot_) = Command{cmd.values[0], cmd.values[1]};
    }
    return emit(now, encode(ScalarVec{{cmd.values[0], cmd.values[1]}}));
  }
  std::optional<PayloadKind> output_kind() const override { return PayloadKind::ScalarVec; }

 private:
  std::shared_ptr<SimContext> sim_;
  std::size_t robot_ = 0;
};

FilterDescriptor filter(FilterId id, std::string name, std::string type, std::uint32_t dt, std::vector<StreamKey> inputs,
                        Params params = {}) {
  return FilterDescriptor{id, std::move(name), std::move(type), dt, std::move(inputs), false, std::move(params)};
}

FilterDescriptor remote(FilterId id, std::string name, CoreId source, std::uint32_t dt) {
  return FilterDescriptor{id, std::move(name), "", dt, {}, true, {{"core", std::to_string(source.value)}}};
}

}  // namespace

std::vector<std::pair<double, double>> resolve_reference(const ScenarioConfig& cfg) {
  if (cfg.random_waypoints <= 0) return cfg.reference;
  if (cfg.reference.size() < 2) throw Error("reference needs two end points");
  std::mt19937_64 rng(cfg.seed ^ 0x5EEDull);
  std::uniform_real_distribution<double> offset(-cfg.waypoint_amplitude, cfg.waypoint_amplitude);
  auto [x0, y0] = cfg.reference.front();
  auto [x1, y1] = cfg.reference.back();
  double len = std::hypot(x1 - x0, y1 - y0);
  double nx = -(y1 - y0) / len, ny = (x1 - x0) / len;
  std::vector<std::pair<double, double>> out{cfg.reference.front()};
  for (int i = 1; i <= cfg.random_waypoints; ++i) {
    double u = static_cast<double>(i) / (cfg.random_waypoints + 1);
    double d = offset(rng);
    out.emplace_back(x0 + u * (x1 - x0) + d * nx, y0 + u * (y1 - y0) + d * ny);
  }
  out.push_back(cfg.reference.back());
  return out;
}

World build_world(const ScenarioConfig& cfg) {
  World w;
  w.obstacles = cfg.obstacles;
  auto reference = resolve_reference(cfg);
  Polyline path(reference);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto place = [&](double s, double lateral, double radius, bool aerial) {
    auto [x, y] = path.at(s);
    double h = path.heading_at(s);
    w.obstacles.push_back({x - lateral * std::sin(h), y + lateral * std::cos(h), radius, aerial});
  };
  const double margin = std::min(4.0, path.length() / 4);
  const double span = path.length() - 2 * margin;
  for (int i = 0; i < cfg.random_obstacles; ++i) {
    double s = margin + span * (i + 0.2 + 0.6 * unit(rng)) / cfg.random_obstacles;
    double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    double lateral = cfg.random_lateral_min + (cfg.random_lateral_max - cfg.random_lateral_min) * unit(rng);
    double radius = 0.25 + 0.15 * unit(rng);
    place(s, side * lateral, radius, false);
  }
  for (int i = 0; i < cfg.hidden_obstacles; ++i) {
    double s = margin + span * (i + 0.3 + 0.4 * unit(rng)) / cfg.hidden_obstacles;
    place(s, -0.15 + 0.3 * unit(rng), 0.35 + 0.1 * unit(rng), true);
  }
  double lo_x = 1e9, lo_y = 1e9, hi_x = -1e9, hi_y = -1e9;
  for (auto [x, y] : reference) {
    lo_x = std::min(lo_x, x), lo_y = std::min(lo_y, y), hi_x = std::max(hi_x, x), hi_y = std::max(hi_y, y);
  }
  w.bounds = {lo_x - 15, lo_y - 15, hi_x + 15, hi_y + 15};
  return w;
}

TwoRobotPipeline build_two_robot_pipeline(const ScenarioConfig& cfg) {
  TwoRobotPipeline p;
  p.world = build_world(cfg);
  const auto pdt = cfg.perception_dt_ms;
  const auto seed = std::to_string(cfg.seed);
  auto key = [](CoreId c, FilterId f) { return StreamKey{c, f}; };
  const auto A = kGroundCore, B = kAerialCore;

  auto& a = p.a;
  a.core = A;
  a.filters.push_back(filter(kCameraA, "camera", "sim.camera", pdt, {},
                             {{"robot", "a"}, {"width", "32"}, {"height", "32"}, {"ahead", num(kCameraAhead)}, {"seed", seed}}));
  a.filters.push_back(filter(kSegA, "segmentation", "inference.toy_segmentation", pdt, {key(A, kCameraA)},
                             {{"threshold", "128"}, {"cell_size", num(kCellSize)}}));
  std::vector<StreamKey> merge_inputs{key(A, kSegA), key(A, kPoseA)};
  std::string ahead = num(kCameraAhead);
  if (cfg.mirroring) {
    a.filters.push_back(remote(kCameraB, "drone_camera", B, pdt));
    a.filters.push_back(remote(kPoseB, "drone_pose", B, pdt));
    a.filters.push_back(filter(kSegB, "drone_segmentation", "inference.toy_segmentation", pdt, {key(B, kCameraB)},
                               {{"threshold", "128"}, {"cell_size", num(kCellSize)}}));
    merge_inputs.push_back(key(A, kSegB));
    merge_inputs.push_back(key(B, kPoseB));
    ahead += ",0";
  }
  a.filters.push_back(filter(kPoseA, "pose", "sim.pose", pdt, {}, {{"robot", "a"}}));
  a.filters.push_back(filter(kMap, "map", "map.merge", pdt, merge_inputs,
                             {{"ahead", ahead}, {"width", "80"}, {"height", "80"}, {"cell_size", num(kCellSize)},
                              {"max_skew_ms", std::to_string(4 * pdt)}}));
  const auto& d = cfg.dwa;
  a.filters.push_back(filter(kPlanner, "planner", "planner.dwa", cfg.planner_dt_ms, {key(A, kMap), key(A, kPoseA)},
                             {{"goal_stream", to_string(key(A, kGoal))},
                              {"omega_max", num(d.omega_max)},
                              {"a_max", num(d.a_max)},
                              {"alpha_max", num(d.alpha_max)},
                              {"horizon_s", num(d.horizon_s)},
                              {"v_samples", std::to_string(d.v_samples)},
                              {"omega_samples", std::to_string(d.omega_samples)},
                              {"weight_heading", num(d.weight_heading)},
                              {"weight_clearance", num(d.weight_clearance)},
                              {"weight_velocity", num(d.weight_velocity)},
                              {"robot_radius", num(d.robot_radius)},
                              {"max_skew_ms", std::to_string(std::max(2 * cfg.planner_dt_ms, 2 * pdt))}}));
  a.filters.push_back(filter(kGoal, "goal", "command.input", 1000, {}, {{"required", "goal_x,goal_y"}}));
  a.filters.push_back(filter(kActuator, "actuator", "sim.actuator", cfg.planner_dt_ms, {key(A, kPlanner)}, {{"robot", "a"}}));
  a.filters.push_back(filter(kDiag, "clock_signals", "diag.clock_signals", 100, {}));

  auto& b = p.b;
  b.core = B;
  b.filters.push_back(filter(kCameraB, "camera", "sim.camera", pdt, {},
                             {{"robot", "b"}, {"width", "64"}, {"height", "64"}, {"ahead", "0"}, {"aerial", "true"}, {"seed", seed}}));
  b.filters.push_back(filter(kPoseB, "pose", "sim.pose", pdt, {}, {{"robot", "b"}}));
  b.filters.push_back(remote(kMap, "ground_map", A, pdt));
  return p;
}

void register_sim_filters(FilterRegistry& registry, std::shared_ptr<SimContext> ctx) {
  registry.add("sim.camera", [ctx] { return std::make_unique<CameraFilter>(ctx); });
  registry.add("sim.pose", [ctx] { return std::make_unique<PoseFilter>(ctx); });
  registry.add("map.merge", [] { return std::make_unique<MapMergeFilter>(); });
  registry.add("planner.dwa", [ctx] { return std::make_unique<PlannerFilter>(ctx); });
  registry.add("sim.actuator", [ctx] { return std::make_unique<ActuatorFilter>(ctx); });
}

namespace {

void wait_until(const std::function<bool()>& done, std::chrono::milliseconds timeout, const char* what) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!done()) {
    if (std::chrono::steady_clock::now() > deadline) throw Error(std::string("simulation stalled waiting for ") + what);
    std::this_thread::sleep_for(std::chrono::microseconds(50));
  }
}

}  // namespace

TrialResult run_trial(const ScenarioConfig& cfg, double velocity, const TrialHooks& hooks) {
  if (!(velocity > 0)) throw Error("trial velocity must be positive");
  auto pipeline = build_two_robot_pipeline(cfg);
  Polyline path(resolve_reference(cfg));

  auto sim = std::make_shared<SimContext>();
  sim->world = pipeline.world;
  sim->path = path;
  sim->speed = velocity;
  sim->accel = cfg.accel;
  const Timestamp t_start{1'000'000};
  sim->t_start = t_start;
  auto [x0, y0] = path.at(0);
  Body ground{{x0, y0, path.heading_at(0), 0, 0}, cfg.robot_radius, true, false};
  Body drone{{x0, y0, path.heading_at(0), 0, 0}, 0.2, false, false};
  sim->bodies = {ground, drone};
  sim->commands = {Command{}, Command{}};

  FilterRegistry registry;
  register_builtin_filters(registry);
  register_inference_filters(registry);
  register_sim_filters(registry, sim);

  std::shared_ptr<DataChannel> channel;
  if (cfg.transport == "socket") {
    channel = std::make_shared<SocketChannel>();
  } else {
    channel = std::make_shared<LoopbackChannel>();
  }
  SignalingServerOptions so;
  so.channel = channel;
  SignalingServer server(so);

  auto clock = std::make_shared<ManualClock>(t_start.millis);
  RuntimeOptions ro;
  ro.clock = clock;
  ro.scheduling = Scheduling::Stepped;
  ro.signaling.servers = {server.address()};
  ro.estimate_peer_offsets = false;  // one logical clock drives both cores
  ro.link_retry = std::chrono::milliseconds(20);

  Tam tam_a, tam_b;
  auto block_b = start_datablock(pipeline.b, registry, tam_b, *channel, ro);
  auto block_a = start_datablock(pipeline.a, registry, tam_a, *channel, ro);
  const std::size_t b_subscribers = cfg.mirroring ? 2 : 0;
  wait_until(
      [&] {
        return block_a->links_connected() && block_b->links_connected() &&
               block_b->active_subscriptions() >= b_subscribers && block_a->active_subscriptions() >= 1;
      },
      std::chrono::seconds(10), "peer links");

  std::vector<StreamKey> mirrored;
  if (cfg.mirroring) mirrored = {{kAerialCore, kCameraB}, {kAerialCore, kPoseB}};

  TrialResult result;
  result.seed = cfg.seed;
  result.velocity = velocity;
  result.planner_dt_ms = cfg.planner_dt_ms;
  result.mirroring = cfg.mirroring;
  result.reference = make_reference(path, velocity, cfg.accel);
  result.min_clearance = std::numeric_limits<double>::infinity();
  const double end_s = result.reference.duration() + cfg.settle_s;
  const double dt = sim->world.dt_sim_ms / 1000.0;

  for (std::uint64_t k = 0;; ++k) {
    Timestamp t{t_start.millis + k * sim->world.dt_sim_ms};
    double tau = static_cast<double>(k) * dt;
    {
      std::lock_guard lock(sim->mutex);
      if (k > 0) sim->bodies = step_world(sim->world, sim->bodies, sim->commands, dt);
      double s_lead = std::min(profile_distance(path.length(), velocity, cfg.accel, tau) + cfg.lead_m, path.length());
      auto [bx, by] = path.at(s_lead);
      sim->bodies[1].state = {bx, by, path.heading_at(s_lead), 0, 0};
      const auto& g = sim->bodies[0];
      result.driven.points.push_back({g.state.x, g.state.y, tau});
      result.min_clearance = std::min(result.min_clearance, obstacle_distance(sim->world, g.state.x, g.state.y) - g.radius);
      result.collided = g.collided;
    }
    clock->set(t);
    block_b->advance_to(t);
    for (const auto& key : mirrored) {
      auto want = tam_b.newest(key);
      if (!want) continue;
      wait_until([&] { auto have = tam_a.newest(key); return have && *have >= *want; }, std::chrono::seconds(5),
                 "mirrored frames");
    }
    block_a->advance_to(t);
    if (hooks.on_step) hooks.on_step(t, *block_a, *sim);
    if (result.collided || tau >= end_s) {
      result.sim_time_s = tau;
      break;
    }
  }

  auto stats = block_a->stop();
  block_b->stop();
  server.stop();
  for (const auto& f : stats.filters) {
    result.ticks += f.ticks;
    result.skipped += f.skipped;
  }
  result.recovery_used = sim->recovery_used;
  result.rmse = rmse(result.driven, result.reference);
  return result;
}

void write_csv(std::ostream& out, const std::vector<TrialResult>& results) {
  out << "seed,velocity,planner_dt_ms,mirroring,rmse_raw,rmse_normalized,collided,min_clearance,ticks,skipped\n";
  for (const auto& r : results) {
    out << r.seed << ',' << r.velocity << ',' << r.planner_dt_ms << ',' << (r.mirroring ? 1 : 0) << ','
        << r.rmse.raw << ',' << r.rmse.normalized << ',' << (r.collided ? 1 : 0) << ',' << r.min_clearance << ','
        << r.ticks << ',' << r.skipped << '\n';
  }
}

}  // namespace ccx::sim
