#pragma once

#include <cstdint>
#include <vector>

#include "ccx/core/payload.hpp"

namespace ccx::sim {

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

struct RobotState {
  double x = 0, y = 0;
  double theta = 0;
  double v = 0, omega = 0;
};

struct Obstacle {
  double x = 0, y = 0, radius = 0.5;
  /// Seen by aerial cameras only (e.g. hidden behind terrain for a ground robot).
  bool aerial_only = false;
};

struct Bounds {
  double min_x = -50, min_y = -50, max_x = 50, max_y = 50;
  bool contains(double x, double y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
};

struct World {
  std::vector<Obstacle> obstacles;
  Bounds bounds;
  std::uint32_t dt_sim_ms = 10;
};

struct Command {
  double v = 0, omega = 0;
};

struct Body {
  RobotState state;
  double radius = 0.25;
  bool ground = true;  // ground bodies collide with obstacles
  bool collided = false;
};

/// Distance from (x, y) to the nearest obstacle surface (negative inside).
double obstacle_distance(const World& w, double x, double y);

/// Unicycle step: x += v cos(theta) dt, y += v sin(theta) dt, theta += omega dt.
RobotState integrate(RobotState s, double v, double omega, double dt_s);

/// Advances every body by dt_s under its command. A ground body that touches an
/// obstacle stops and stays stopped.
std::vector<Body> step_world(const World& w, std::vector<Body> bodies, const std::vector<Command>& commands,
                             double dt_s);

/// Top-view camera: a width x height window of cell_size pixels, axis-aligned,
/// centered at (cx, cy) snapped to the cell lattice. Obstacles are bright
/// (>= 200), ground dark (< 60), outside the world bounds white.
ImageRaw render_view(const World& w, double cx, double cy, std::uint16_t width, std::uint16_t height,
                     double cell_size, bool aerial_viewer, std::uint64_t seed);

/// Lower-left corner of a window centered at (cx, cy) snapped to the lattice.
std::pair<double, double> view_origin(double cx, double cy, std::uint16_t width, std::uint16_t height,
                                      double cell_size);

}  // namespace ccx::sim
