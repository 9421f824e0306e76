#include "ccx/sim/world.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ccx::sim {

double normalize_angle(double a) {
  a = std::remainder(a, 2 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2 * std::numbers::pi;
  return a;
}

double obstacle_distance(const World& w, double x, double y) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : w.obstacles) best = std::min(best, std::hypot(x - o.x, y - o.y) - o.radius);
  return best;
}

RobotState integrate(RobotState s, double v, double omega, double dt_s) {
  s.x += v * std::cos(s.theta) * dt_s;
  s.y += v * std::sin(s.theta) * dt_s;
  s.theta = normalize_angle(s.theta + omega * dt_s);
  s.v = v;
  s.omega = omega;
  return s;
}

std::vector<Body> step_world(const World& w, std::vector<Body> bodies, const std::vector<Command>& commands,
                             double dt_s) {
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    auto& b = bodies[i];
    if (b.collided) continue;
    Command c = i < commands.size() ? commands[i] : Command{};
    b.state = integrate(b.state, c.v, c.omega, dt_s);
    if (b.ground && obstacle_distance(w, b.state.x, b.state.y) < b.radius) {
      b.collided = true;
      b.state.v = 0;
      b.state.omega = 0;
    }
  }
  return bodies;
}

std::pair<double, double> view_origin(double cx, double cy, std::uint16_t width, std::uint16_t height,
                                      double cell_size) {
  double sx = std::round(cx / cell_size) * cell_size;
  double sy = std::round(cy / cell_size) * cell_size;
  return {sx - width * cell_size / 2, sy - height * cell_size / 2};
}

namespace {

std::uint8_t texture(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  std::uint64_t h = seed ^ (static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ull) ^
                    (static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4Full);
  h ^= h >> 29;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 32;
  return static_cast<std::uint8_t>(h % 40);
}

}  // namespace

ImageRaw render_view(const World& w, double cx, double cy, std::uint16_t width, std::uint16_t height,
                     double cell_size, bool aerial_viewer, std::uint64_t seed) {
  auto [ox, oy] = view_origin(cx, cy, width, height, cell_size);
  ImageRaw img{width, height, 1, Bytes(std::size_t{width} * height)};
  for (std::uint16_t r = 0; r < height; ++r) {
    double y = oy + (r + 0.5) * cell_size;
    for (std::uint16_t c = 0; c < width; ++c) {
      double x = ox + (c + 0.5) * cell_size;
      std::uint8_t px;
      if (!w.bounds.contains(x, y)) {
        px = 255;
      } else {
        px = static_cast<std::uint8_t>(20 + texture(std::llround(x / cell_size), std::llround(y / cell_size), seed));
        for (const auto& o : w.obstacles) {
          if (o.aerial_only && !aerial_viewer) continue;
          if (std::hypot(x - o.x, y - o.y) <= o.radius) {
            px = static_cast<std::uint8_t>(210 + texture(c, r, seed) % 40);
            break;
          }
        }
      }
      img.pixels[std::size_t{r} * width + c] = px;
    }
  }
  return img;
}

}  // namespace ccx::sim
