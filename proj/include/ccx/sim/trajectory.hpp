#pragma once

#include <utility>
#include <vector>

#include "ccx/core/error.hpp"

namespace ccx::sim {

class EmptyTrajectory : public Error {
 public:
  EmptyTrajectory() : Error("trajectory has no points") {}
};

struct TrajPoint {
  double x = 0, y = 0;
  double t = 0;  // seconds, strictly increasing along a trajectory
};

struct ReferenceTrajectory {
  std::vector<TrajPoint> points;

  /// Linear interpolation, clamped to the end points. Throws EmptyTrajectory.
  std::pair<double, double> position_at(double t) const;
  double duration() const { return points.empty() ? 0.0 : points.back().t - points.front().t; }
};

/// Throws ccx::Error unless timestamps strictly increase.
void validate(const ReferenceTrajectory& r);

/// Piecewise-linear path parameterized by arc length.
class Polyline {
 public:
  explicit Polyline(std::vector<std::pair<double, double>> vertices);

  double length() const { return cumulative_.back(); }
  std::pair<double, double> at(double s) const;
  /// Direction of travel at arc length s.
  double heading_at(double s) const;
  /// Arc length of the closest point to (x, y).
  double project(double x, double y) const;

 private:
  std::vector<std::pair<double, double>> v_;
  std::vector<double> cumulative_;
};

/// Trapezoidal speed profile along `path` (accelerate at `accel`, cruise at
/// `speed`, brake at `accel`), sampled every sample_s seconds.
ReferenceTrajectory make_reference(const Polyline& path, double speed, double accel, double sample_s = 0.1);

/// Arc length reached at time t under the same profile.
double profile_distance(double length, double speed, double accel, double t);

struct RmseResult {
  double raw = 0;         // sqrt(sum of squared planar deviations)
  double normalized = 0;  // sqrt(sum / T)
  std::size_t points = 0;
};

/// The driven trajectory is resampled onto the reference timestamps by linear
/// interpolation. Throws EmptyTrajectory.
RmseResult rmse(const ReferenceTrajectory& driven, const ReferenceTrajectory& reference);

}  // namespace ccx::sim
