#pragma once

#include <cstdint>
#include <vector>

#include "ccx/core/error.hpp"
#include "ccx/core/payload.hpp"
#include "ccx/sim/world.hpp"

namespace ccx::sim {

struct DwaConfig {
  double v_max = 1.0;          // m/s
  double omega_max = 2.0;      // rad/s
  double a_max = 2.0;          // m/s^2
  double alpha_max = 10.0;     // rad/s^2
  double horizon_s = 1.5;
  int v_samples = 7;
  int omega_samples = 11;
  double weight_heading = 1.0;
  double weight_clearance = 1.0;
  double weight_velocity = 1.0;
  double robot_radius = 0.35;  // m, includes the safety margin
  double dt_s = 0.05;          // control period: width of the dynamic window
  double rollout_step_s = 0.05;
  double clearance_cap_m = 1.0;
  std::uint8_t occupied_threshold = 128;
};

/// Throws ccx::Error when a field is out of range.
void validate(const DwaConfig& cfg);

struct DwaCandidate {
  double v = 0, omega = 0;
  bool admissible = false;
  double heading = 0;    // raw: pi - |bearing error| at the horizon
  double clearance = 0;  // raw: capped min distance along the rollout
  double velocity = 0;   // raw: v / v_max
  double score = 0;      // weighted sum of normalized terms
};

struct DwaResult {
  double v = 0, omega = 0;
  bool recovery = false;  // no admissible velocity: spin in place
  std::vector<DwaCandidate> candidates;
};

/// Candidate values along one axis: the window [cur - acc*dt, cur + acc*dt]
/// clipped to [lo, hi], sampled at n evenly spaced points including both ends.
/// An empty clipped window collapses to the single bound nearest to it.
std::vector<double> window_samples(double cur, double acc, double dt, double lo, double hi, int n);

/// Plans one command. The grid is robot-centric: centered on (state.x, state.y),
/// axis-aligned with the world, row index growing with y. A cell is occupied
/// when its value is >= occupied_threshold.
///
/// Each lattice candidate is rolled out with the unicycle step for horizon_s and
/// then for its braking time v / (2 a_max). It is admissible when every rollout
/// point keeps at least robot_radius from every occupied cell center. Scores
/// are min-max normalized over admissible candidates (a constant term scores 0);
/// the scan keeps the first best in lattice order (v outer, omega inner),
/// replacing it on a higher score, or on an equal score (1e-9) with higher v,
/// then smaller |omega|.
DwaResult dwa_plan(const RobotState& state, double goal_x, double goal_y, const OccupancyGrid& grid,
                   const DwaConfig& cfg);

}  // namespace ccx::sim
