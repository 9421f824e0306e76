#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ccx/runtime/block.hpp"
#include "ccx/runtime/filter.hpp"
#include "ccx/sim/dwa.hpp"
#include "ccx/sim/trajectory.hpp"
#include "ccx/sim/world.hpp"

namespace ccx::sim {

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::vector<std::pair<double, double>> reference{{0, 0}, {20, 0}};
  /// Interior waypoints placed from the seed with lateral offsets up to
  /// waypoint_amplitude, evenly spaced between the reference end points.
  int random_waypoints = 0;
  double waypoint_amplitude = 1.0;
  std::vector<Obstacle> obstacles;
  /// Obstacles placed from the seed beside the reference.
  int random_obstacles = 0;
  double random_lateral_min = 0.5;
  double random_lateral_max = 0.9;
  /// Aerial-only obstacles placed from the seed on the reference.
  int hidden_obstacles = 0;
  std::vector<double> velocities{1.0};
  double accel = 0.5;  // reference ramp, m/s^2
  std::uint32_t planner_dt_ms = 50;
  std::uint32_t perception_dt_ms = 50;
  bool mirroring = true;
  double lead_m = 2.5;  // drone lead along the reference
  double settle_s = 2.0;
  double robot_radius = 0.25;
  std::string transport = "loopback";  // or "socket"
  DwaConfig dwa;
};

struct TrialResult {
  std::uint64_t seed = 0;
  double velocity = 0;
  std::uint32_t planner_dt_ms = 0;
  bool mirroring = true;
  RmseResult rmse;
  std::uint64_t ticks = 0;
  std::uint64_t skipped = 0;
  bool collided = false;
  bool recovery_used = false;
  double min_clearance = 0;  // closest approach of the ground robot's body to an obstacle
  double sim_time_s = 0;
  ReferenceTrajectory driven;
  ReferenceTrajectory reference;
};

struct TwoRobotPipeline {
  DataBlockDescriptor a;  // ground robot: cameras, segmentation, map, planner, actuator
  DataBlockDescriptor b;  // drone: camera and pose, mirrors A's map
  World world;
};

inline constexpr CoreId kGroundCore{0xA1};
inline constexpr CoreId kAerialCore{0xB2};

/// Reference polyline with the seeded waypoints resolved.
std::vector<std::pair<double, double>> resolve_reference(const ScenarioConfig& cfg);
/// World with the seeded obstacles resolved.
World build_world(const ScenarioConfig& cfg);
TwoRobotPipeline build_two_robot_pipeline(const ScenarioConfig& cfg);

/// Shared state behind the simulation filters of one trial.
struct SimContext {
  std::mutex mutex;
  World world;
  std::vector<Body> bodies;  // 0: ground robot, 1: drone
  std::vector<Command> commands;
  std::optional<Polyline> path;
  double speed = 1.0;
  double accel = 0.5;
  Timestamp t_start;
  bool recovery_used = false;
};

/// Registers sim.camera, sim.pose, map.merge, planner.dwa and sim.actuator bound
/// to `ctx`.
void register_sim_filters(FilterRegistry& registry, std::shared_ptr<SimContext> ctx);

struct TrialHooks {
  /// Called after each simulation step with the step time.
  std::function<void(Timestamp, RunningBlock& ground, SimContext&)> on_step;
};

/// Runs both robots as DataBlocks over a real transport with an in-process
/// signaling server, stepping all clocks from one logical simulation clock.
TrialResult run_trial(const ScenarioConfig& cfg, double velocity, const TrialHooks& hooks = {});

/// One row per trial with a header row.
void write_csv(std::ostream& out, const std::vector<TrialResult>& results);

}  // namespace ccx::sim
