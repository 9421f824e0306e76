#pragma once

#include <random>
#include <utility>
#include <vector>

#include "ccx/core/payload.hpp"
#include "ccx/sim/dwa.hpp"
#include "ccx/sim/world.hpp"

namespace ccx::test {

struct OracleCandidate {
  double v, w;
  bool ok = true;
  double heading = 0, clearance = 0, velocity = 0, score = 0;
};

/// Exhaustive lattice evaluation against every occupied cell center. Returns
/// the chosen (v, omega); `all` receives every candidate in lattice order.
std::pair<double, double> dwa_oracle(const sim::RobotState& s0, double gx, double gy, const OccupancyGrid& g,
                                     const sim::DwaConfig& cfg, std::vector<OracleCandidate>* all);

/// n x n robot-centric grid with 1 to 6 random discs kept clear of the robot.
OccupancyGrid random_grid(std::mt19937_64& rng, int n, double cell, const sim::RobotState& s, double radius,
                          std::vector<sim::Obstacle>* placed);

/// n x n robot-centric grid marking cell centers inside any of `obstacles`.
OccupancyGrid rasterize(const std::vector<sim::Obstacle>& obstacles, const sim::RobotState& s, int n, double cell);

}  // namespace ccx::test
