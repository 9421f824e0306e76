#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccx/core/bytes.hpp"

namespace ccx {

enum class PayloadKind : std::uint16_t {
  ImageRaw = 1,
  Pose2D = 2,
  Lidar2D = 3,
  OccupancyGrid = 4,
  Command = 5,
  ScalarVec = 6,
  Trajectory = 7,
};

bool is_payload_kind(std::uint16_t raw);
const char* kind_name(PayloadKind kind);

/// Opaque payload bytes in the kind's canonical big-endian encoding.
struct Payload {
  PayloadKind kind = PayloadKind::ScalarVec;
  Bytes bytes;

  bool operator==(const Payload&) const = default;
};

// Typed views of each payload kind.

struct Pose2D {
  double x = 0, y = 0, theta = 0;
  bool operator==(const Pose2D&) const = default;
};

struct Lidar2D {
  std::vector<float> ranges;
  bool operator==(const Lidar2D&) const = default;
};

struct ImageRaw {
  std::uint16_t width = 0, height = 0;
  std::uint8_t channels = 1;
  Bytes pixels;  // row-major, width*height*channels
  bool operator==(const ImageRaw&) const = default;
};

struct OccupancyGrid {
  std::uint16_t width = 0, height = 0;
  float cell_size = 0.1f;
  Bytes cells;  // row-major, 0 free .. 255 occupied
  bool operator==(const OccupancyGrid&) const = default;

  std::uint8_t at(int col, int row) const { return cells[static_cast<std::size_t>(row) * width + col]; }
};

/// Flat string key-value document, carried as compact JSON with sorted keys.
struct Command {
  std::map<std::string, std::string> fields;
  bool operator==(const Command&) const = default;
};

struct ScalarVec {
  std::vector<double> values;
  bool operator==(const ScalarVec&) const = default;
};

struct TrajectoryPoint {
  double x = 0, y = 0;
  std::uint64_t t = 0;
  bool operator==(const TrajectoryPoint&) const = default;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool operator==(const Trajectory&) const = default;
};

Payload encode(const Pose2D& v);
Payload encode(const Lidar2D& v);
Payload encode(const ImageRaw& v);
Payload encode(const OccupancyGrid& v);
Payload encode(const Command& v);
Payload encode(const ScalarVec& v);
Payload encode(const Trajectory& v);

// Decoders throw MalformedPayload on wrong kind, truncation, trailing bytes,
// or a non-canonical encoding.
Pose2D decode_pose2d(const Payload& p);
Lidar2D decode_lidar2d(const Payload& p);
ImageRaw decode_image(const Payload& p);
OccupancyGrid decode_grid(const Payload& p);
Command decode_command(const Payload& p);
ScalarVec decode_scalar_vec(const Payload& p);
Trajectory decode_trajectory(const Payload& p);

/// Decodes and re-encodes under the payload's kind.
Payload canonical_payload_roundtrip(const Payload& p);

/// One-line human readable summary (used by the console).
std::string summarize(const Payload& p);

}  // namespace ccx
