#include "ccx/sim/dwa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace ccx::sim {

void validate(const DwaConfig& c) {
  if (!(c.v_max >= 0 && c.omega_max > 0 && c.a_max > 0 && c.alpha_max > 0 && c.horizon_s > 0 && c.robot_radius > 0 &&
        c.dt_s > 0 && c.rollout_step_s > 0 && c.clearance_cap_m > 0)) {
    throw Error("DWA config values must be positive");
  }
  if (c.v_samples < 2 || c.omega_samples < 2) throw Error("DWA needs at least 2 samples per axis");
}

std::vector<double> window_samples(double cur, double acc, double dt, double lo, double hi, int n) {
  double a = std::max(cur - acc * dt, lo);
  double b = std::min(cur + acc * dt, hi);
  if (a > b) return {cur - acc * dt > hi ? hi : lo};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i == n - 1 ? b : a + (b - a) * i / (n - 1);
  return out;
}

namespace {

// Boundary occupied cells bucketed by clearance_cap. Points outside every
// occupied square are nearest to a boundary cell.
class ObstacleIndex {
 public:
  ObstacleIndex(const OccupancyGrid& g, double ox, double oy, std::uint8_t threshold, double cap)
      : grid_(g), ox_(ox), oy_(oy), threshold_(threshold), cap_(cap) {
    auto occ = [&](int c, int r) {
      return c >= 0 && r >= 0 && c < g.width && r < g.height && g.at(c, r) >= threshold;
    };
    for (int r = 0; r < g.height; ++r) {
      for (int c = 0; c < g.width; ++c) {
        if (!occ(c, r)) continue;
        if (occ(c - 1, r) && occ(c + 1, r) && occ(c, r - 1) && occ(c, r + 1)) continue;
        double x = ox + (c + 0.5) * g.cell_size;
        double y = oy + (r + 0.5) * g.cell_size;
        buckets_[key(bucket(x), bucket(y))].push_back({x, y});
      }
    }
  }

  double distance(double x, double y) const {
    auto c = static_cast<long>(std::floor((x - ox_) / grid_.cell_size));
    auto r = static_cast<long>(std::floor((y - oy_) / grid_.cell_size));
    if (c >= 0 && r >= 0 && c < grid_.width && r < grid_.height && grid_.at(int(c), int(r)) >= threshold_) return 0;
    double best2 = cap_ * cap_;
    long bx = bucket(x), by = bucket(y);
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(bx + dx, by + dy));
        if (it == buckets_.end()) continue;
        for (const auto& [px, py] : it->second) {
          double d2 = (px - x) * (px - x) + (py - y) * (py - y);
          if (d2 < best2) best2 = d2;
        }
      }
    }
    return std::sqrt(best2);
  }

 private:
  long bucket(double v) const { return static_cast<long>(std::floor(v / cap_)); }
  static std::int64_t key(long bx, long by) { return (static_cast<std::int64_t>(bx) << 32) ^ (by & 0xFFFFFFFF); }

  const OccupancyGrid& grid_;
  double ox_, oy_;
  std::uint8_t threshold_;
  double cap_;
  std::unordered_map<std::int64_t, std::vector<std::pair<double, double>>> buckets_;
};

void normalize(std::vector<DwaCandidate>& cs, double DwaCandidate::*field, std::vector<double>& out) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : cs) {
    if (!c.admissible) continue;
    lo = std::min(lo, c.*field);
    hi = std::max(hi, c.*field);
  }
  out.assign(cs.size(), 0.0);
  if (!(hi - lo > 1e-12)) return;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (cs[i].admissible) out[i] = (cs[i].*field - lo) / (hi - lo);
  }
}

}  // namespace

DwaResult dwa_plan(const RobotState& state, double goal_x, double goal_y, const OccupancyGrid& grid,
                   const DwaConfig& cfg) {
  if (!(grid.cell_size > 0)) throw Error("grid cell_size must be positive");
  validate(cfg);
  const double ox = state.x - grid.width * static_cast<double>(grid.cell_size) / 2;
  const double oy = state.y - grid.height * static_cast<double>(grid.cell_size) / 2;
  ObstacleIndex index(grid, ox, oy, cfg.occupied_threshold, cfg.clearance_cap_m);

  auto vs = window_samples(state.v, cfg.a_max, cfg.dt_s, 0.0, cfg.v_max, cfg.v_samples);
  auto ws = window_samples(state.omega, cfg.alpha_max, cfg.dt_s, -cfg.omega_max, cfg.omega_max, cfg.omega_samples);
  const auto horizon_steps = static_cast<int>(std::ceil(cfg.horizon_s / cfg.rollout_step_s - 1e-9));

  DwaResult result;
  for (double v : vs) {
    for (double w : ws) {
      DwaCandidate c{v, w, true, 0, cfg.clearance_cap_m, cfg.v_max > 0 ? v / cfg.v_max : 0.0, 0};
      int total = horizon_steps + static_cast<int>(std::ceil(v / (2 * cfg.a_max) / cfg.rollout_step_s - 1e-9));
      RobotState s = state;
      for (int k = 1; k <= total; ++k) {
        s = integrate(s, v, w, cfg.rollout_step_s);
        double d = index.distance(s.x, s.y);
        if (d < cfg.robot_radius) {
          c.admissible = false;
          break;
        }
        c.clearance = std::min(c.clearance, d);
        if (k == horizon_steps) {
          c.heading = std::numbers::pi - std::abs(normalize_angle(std::atan2(goal_y - s.y, goal_x - s.x) - s.theta));
        }
      }
      result.candidates.push_back(c);
    }
  }

  std::vector<double> nh, nc, nv;
  normalize(result.candidates, &DwaCandidate::heading, nh);
  normalize(result.candidates, &DwaCandidate::clearance, nc);
  normalize(result.candidates, &DwaCandidate::velocity, nv);

  const DwaCandidate* best = nullptr;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    auto& c = result.candidates[i];
    if (!c.admissible) continue;
    c.score = cfg.weight_heading * nh[i] + cfg.weight_clearance * nc[i] + cfg.weight_velocity * nv[i];
    if (!best || c.score > best->score + 1e-9) {
      best = &c;
    } else if (std::abs(c.score - best->score) <= 1e-9) {
      if (c.v > best->v + 1e-12 || (std::abs(c.v - best->v) <= 1e-12 && std::abs(c.omega) < std::abs(best->omega) - 1e-12)) {
        best = &c;
      }
    }
  }

  if (!best) {
    double err = normalize_angle(std::atan2(goal_y - state.y, goal_x - state.x) - state.theta);
    result.v = 0;
    result.omega = err >= 0 ? cfg.omega_max : -cfg.omega_max;
    result.recovery = true;
    return result;
  }
  result.v = best->v;
  result.omega = best->omega;
  return result;
}

}  // namespace ccx::sim
