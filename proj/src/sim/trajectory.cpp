#include "ccx/sim/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace ccx::sim {

std::pair<double, double> ReferenceTrajectory::position_at(double t) const {
  if (points.empty()) throw EmptyTrajectory();
  if (t <= points.front().t) return {points.front().x, points.front().y};
  if (t >= points.back().t) return {points.back().x, points.back().y};
  auto it = std::upper_bound(points.begin(), points.end(), t, [](double v, const TrajPoint& p) { return v < p.t; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  double u = (t - a.t) / (b.t - a.t);
  return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
}

void validate(const ReferenceTrajectory& r) {
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    if (!(r.points[i].t > r.points[i - 1].t)) throw Error("trajectory timestamps must strictly increase");
  }
}

Polyline::Polyline(std::vector<std::pair<double, double>> vertices) : v_(std::move(vertices)) {
  if (v_.size() < 2) throw Error("polyline needs at least two vertices");
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < v_.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + std::hypot(v_[i].first - v_[i - 1].first, v_[i].second - v_[i - 1].second));
  }
  if (!(length() > 0)) throw Error("polyline has zero length");
}

namespace {

std::size_t segment_of(const std::vector<double>& cum, double s) {
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  auto i = static_cast<std::size_t>(std::distance(cum.begin(), it));
  return std::clamp<std::size_t>(i, 1, cum.size() - 1) - 1;
}

}  // namespace

std::pair<double, double> Polyline::at(double s) const {
  s = std::clamp(s, 0.0, length());
  auto i = segment_of(cumulative_, s);
  double seg = cumulative_[i + 1] - cumulative_[i];
  double u = seg > 0 ? (s - cumulative_[i]) / seg : 0.0;
  return {v_[i].first + u * (v_[i + 1].first - v_[i].first), v_[i].second + u * (v_[i + 1].second - v_[i].second)};
}

double Polyline::heading_at(double s) const {
  auto i = segment_of(cumulative_, std::clamp(s, 0.0, length()));
  return std::atan2(v_[i + 1].second - v_[i].second, v_[i + 1].first - v_[i].first);
}

double Polyline::project(double x, double y) const {
  double best_d = INFINITY, best_s = 0;
  for (std::size_t i = 0; i + 1 < v_.size(); ++i) {
    double ax = v_[i].first, ay = v_[i].second;
    double dx = v_[i + 1].first - ax, dy = v_[i + 1].second - ay;
    double len2 = dx * dx + dy * dy;
    double u = len2 > 0 ? std::clamp(((x - ax) * dx + (y - ay) * dy) / len2, 0.0, 1.0) : 0.0;
    double d = std::hypot(ax + u * dx - x, ay + u * dy - y);
    if (d < best_d) {
      best_d = d;
      best_s = cumulative_[i] + u * std::sqrt(len2);
    }
  }
  return best_s;
}

double profile_distance(double length, double speed, double accel, double t) {
  if (t <= 0) return 0;
  double ramp_t = speed / accel;
  double ramp_d = 0.5 * accel * ramp_t * ramp_t;
  if (2 * ramp_d > length) {
    // Triangular profile.
    ramp_t = std::sqrt(length / accel);
    ramp_d = length / 2;
    speed = accel * ramp_t;
  }
  double cruise_t = (length - 2 * ramp_d) / speed;
  if (t < ramp_t) return 0.5 * accel * t * t;
  if (t < ramp_t + cruise_t) return ramp_d + speed * (t - ramp_t);
  double tb = t - ramp_t - cruise_t;
  if (tb >= ramp_t) return length;
  return ramp_d + speed * cruise_t + speed * tb - 0.5 * accel * tb * tb;
}

ReferenceTrajectory make_reference(const Polyline& path, double speed, double accel, double sample_s) {
  if (!(speed > 0 && accel > 0 && sample_s > 0)) throw Error("reference speed, accel and sample period must be positive");
  ReferenceTrajectory r;
  for (int k = 0;; ++k) {
    double t = k * sample_s;
    double s = profile_distance(path.length(), speed, accel, t);
    auto [x, y] = path.at(s);
    r.points.push_back({x, y, t});
    if (s >= path.length()) break;
  }
  return r;
}

RmseResult rmse(const ReferenceTrajectory& driven, const ReferenceTrajectory& reference) {
  if (driven.points.empty() || reference.points.empty()) throw EmptyTrajectory();
  double sum = 0;
  for (const auto& p : reference.points) {
    auto [x, y] = driven.position_at(p.t);
    sum += (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
  }
  RmseResult out;
  out.points = reference.points.size();
  out.raw = std::sqrt(sum);
  out.normalized = std::sqrt(sum / static_cast<double>(out.points));
  return out;
}

}  // namespace ccx::sim
