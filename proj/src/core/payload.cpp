#include "ccx/core/payload.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>

#include "ccx/core/error.hpp"

namespace ccx {

bool is_payload_kind(std::uint16_t raw) { return raw >= 1 && raw <= 7; }

const char* kind_name(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::ImageRaw: return "IMAGE_RAW";
    case PayloadKind::Pose2D: return "POSE2D";
    case PayloadKind::Lidar2D: return "LIDAR2D";
    case PayloadKind::OccupancyGrid: return "OCCUPANCY_GRID";
    case PayloadKind::Command: return "COMMAND";
    case PayloadKind::ScalarVec: return "SCALAR_VEC";
    case PayloadKind::Trajectory: return "TRAJECTORY";
  }
  return "UNKNOWN";
}

namespace {

void expect_kind(const Payload& p, PayloadKind kind) {
  if (p.kind != kind) {
    throw MalformedPayload(std::string("expected ") + kind_name(kind) + ", got " + kind_name(p.kind));
  }
}

void expect_end(const ByteReader& r) {
  if (r.remaining() != 0) throw MalformedPayload("trailing bytes");
}

// Guards count-prefixed decoders against absurd counts before allocating.
void expect_room(const ByteReader& r, std::uint64_t count, std::size_t element_size) {
  if (count * element_size > r.remaining()) throw MalformedPayload("count exceeds payload size");
}

std::string command_text(const Command& v) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [k, val] : v.fields) doc[k] = val;
  try {
    return doc.dump();
  } catch (const nlohmann::json::exception&) {
    throw MalformedPayload("command text is not valid UTF-8");
  }
}

}  // namespace

Payload encode(const Pose2D& v) {
  Payload p{PayloadKind::Pose2D, {}};
  ByteWriter w(p.bytes);
  w.f64(v.x);
  w.f64(v.y);
  w.f64(v.theta);
  return p;
}

Payload encode(const Lidar2D& v) {
  Payload p{PayloadKind::Lidar2D, {}};
  ByteWriter w(p.bytes);
  w.u32(static_cast<std::uint32_t>(v.ranges.size()));
  for (float r : v.ranges) w.f32(r);
  return p;
}

Payload encode(const ImageRaw& v) {
  if (v.pixels.size() != static_cast<std::size_t>(v.width) * v.height * v.channels) {
    throw MalformedPayload("image pixel count does not match dimensions");
  }
  Payload p{PayloadKind::ImageRaw, {}};
  ByteWriter w(p.bytes);
  w.u16(v.width);
  w.u16(v.height);
  w.u8(v.channels);
  w.raw(v.pixels);
  return p;
}

Payload encode(const OccupancyGrid& v) {
  if (v.cells.size() != static_cast<std::size_t>(v.width) * v.height) {
    throw MalformedPayload("grid cell count does not match dimensions");
  }
  Payload p{PayloadKind::OccupancyGrid, {}};
  ByteWriter w(p.bytes);
  w.u16(v.width);
  w.u16(v.height);
  w.f32(v.cell_size);
  w.raw(v.cells);
  return p;
}

Payload encode(const Command& v) {
  Payload p{PayloadKind::Command, {}};
  auto text = command_text(v);
  ByteWriter w(p.bytes);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.raw(text);
  return p;
}

Payload encode(const ScalarVec& v) {
  Payload p{PayloadKind::ScalarVec, {}};
  ByteWriter w(p.bytes);
  w.u32(static_cast<std::uint32_t>(v.values.size()));
  for (double d : v.values) w.f64(d);
  return p;
}

Payload encode(const Trajectory& v) {
  Payload p{PayloadKind::Trajectory, {}};
  ByteWriter w(p.bytes);
  w.u32(static_cast<std::uint32_t>(v.points.size()));
  for (const auto& pt : v.points) {
    w.f64(pt.x);
    w.f64(pt.y);
    w.u64(pt.t);
  }
  return p;
}

Pose2D decode_pose2d(const Payload& p) {
  expect_kind(p, PayloadKind::Pose2D);
  ByteReader r(p.bytes);
  Pose2D v{r.f64(), r.f64(), r.f64()};
  expect_end(r);
  return v;
}

Lidar2D decode_lidar2d(const Payload& p) {
  expect_kind(p, PayloadKind::Lidar2D);
  ByteReader r(p.bytes);
  Lidar2D v;
  auto n = r.u32();
  expect_room(r, n, 4);
  v.ranges.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) v.ranges.push_back(r.f32());
  expect_end(r);
  return v;
}

ImageRaw decode_image(const Payload& p) {
  expect_kind(p, PayloadKind::ImageRaw);
  ByteReader r(p.bytes);
  ImageRaw v;
  v.width = r.u16();
  v.height = r.u16();
  v.channels = r.u8();
  auto pixels = r.raw(static_cast<std::size_t>(v.width) * v.height * v.channels);
  v.pixels.assign(pixels.begin(), pixels.end());
  expect_end(r);
  return v;
}

OccupancyGrid decode_grid(const Payload& p) {
  expect_kind(p, PayloadKind::OccupancyGrid);
  ByteReader r(p.bytes);
  OccupancyGrid v;
  v.width = r.u16();
  v.height = r.u16();
  v.cell_size = r.f32();
  auto cells = r.raw(static_cast<std::size_t>(v.width) * v.height);
  v.cells.assign(cells.begin(), cells.end());
  expect_end(r);
  return v;
}

Command decode_command(const Payload& p) {
  expect_kind(p, PayloadKind::Command);
  ByteReader r(p.bytes);
  auto len = r.u32();
  auto raw = r.raw(len);
  expect_end(r);
  std::string text(raw.begin(), raw.end());
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw MalformedPayload("command is not a JSON object");
  Command v;
  for (const auto& [k, val] : doc.items()) {
    if (!val.is_string()) throw MalformedPayload("command field '" + k + "' is not a string");
    v.fields[k] = val.get<std::string>();
  }
  if (command_text(v) != text) throw MalformedPayload("command document is not canonical");
  return v;
}

ScalarVec decode_scalar_vec(const Payload& p) {
  expect_kind(p, PayloadKind::ScalarVec);
  ByteReader r(p.bytes);
  ScalarVec v;
  auto n = r.u32();
  expect_room(r, n, 8);
  v.values.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) v.values.push_back(r.f64());
  expect_end(r);
  return v;
}

Trajectory decode_trajectory(const Payload& p) {
  expect_kind(p, PayloadKind::Trajectory);
  ByteReader r(p.bytes);
  Trajectory v;
  auto n = r.u32();
  expect_room(r, n, 24);
  v.points.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    TrajectoryPoint pt;
    pt.x = r.f64();
    pt.y = r.f64();
    pt.t = r.u64();
    v.points.push_back(pt);
  }
  expect_end(r);
  return v;
}

Payload canonical_payload_roundtrip(const Payload& p) {
  switch (p.kind) {
    case PayloadKind::ImageRaw: return encode(decode_image(p));
    case PayloadKind::Pose2D: return encode(decode_pose2d(p));
    case PayloadKind::Lidar2D: return encode(decode_lidar2d(p));
    case PayloadKind::OccupancyGrid: return encode(decode_grid(p));
    case PayloadKind::Command: return encode(decode_command(p));
    case PayloadKind::ScalarVec: return encode(decode_scalar_vec(p));
    case PayloadKind::Trajectory: return encode(decode_trajectory(p));
  }
  throw MalformedPayload("unknown payload kind " + std::to_string(static_cast<int>(p.kind)));
}

std::string summarize(const Payload& p) {
  char buf[160];
  try {
    switch (p.kind) {
      case PayloadKind::Pose2D: {
        auto v = decode_pose2d(p);
        std::snprintf(buf, sizeof buf, "POSE2D x=%.3f y=%.3f theta=%.3f", v.x, v.y, v.theta);
        return buf;
      }
      case PayloadKind::Lidar2D:
        return "LIDAR2D ranges=" + std::to_string(decode_lidar2d(p).ranges.size());
      case PayloadKind::ImageRaw: {
        auto v = decode_image(p);
        std::snprintf(buf, sizeof buf, "IMAGE_RAW %ux%ux%u", v.width, v.height, v.channels);
        return buf;
      }
      case PayloadKind::OccupancyGrid: {
        auto v = decode_grid(p);
        std::size_t occupied = 0;
        for (auto c : v.cells) occupied += c >= 128;
        std::snprintf(buf, sizeof buf, "OCCUPANCY_GRID %ux%u cell=%.2fm occupied=%zu", v.width, v.height,
                      static_cast<double>(v.cell_size), occupied);
        return buf;
      }
      case PayloadKind::Command: return "COMMAND " + command_text(decode_command(p));
      case PayloadKind::ScalarVec: {
        auto v = decode_scalar_vec(p);
        std::string out = "SCALAR_VEC [";
        for (std::size_t i = 0; i < v.values.size() && i < 8; ++i) {
          std::snprintf(buf, sizeof buf, "%s%g", i ? ", " : "", v.values[i]);
          out += buf;
        }
        if (v.values.size() > 8) out += ", ...";
        return out + "]";
      }
      case PayloadKind::Trajectory:
        return "TRAJECTORY points=" + std::to_string(decode_trajectory(p).points.size());
    }
  } catch (const MalformedPayload& e) {
    return std::string("<") + e.what() + ">";
  }
  return "<unknown>";
}

}  // namespace ccx
