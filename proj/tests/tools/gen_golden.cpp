// Writes testdata/frames/*.bin and index.json. Run from the repository root:
//   build/tests/ccx_gen_golden testdata/frames
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "ccx/core/payload.hpp"
#include "ccx/transport/wire.hpp"

using namespace ccx;
using nlohmann::json;

namespace {

std::string hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (auto c : b) {
    out += digits[c >> 4];
    out += digits[c & 15];
  }
  return out;
}

const char* msg_name(MsgType t) {
  switch (t) {
    case MsgType::Data: return "DATA";
    case MsgType::Subscribe: return "SUBSCRIBE";
    case MsgType::Unsubscribe: return "UNSUBSCRIBE";
    case MsgType::Ping: return "PING";
    case MsgType::Pong: return "PONG";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path dir = argc > 1 ? argv[1] : "testdata/frames";
  std::filesystem::create_directories(dir);
  json index = json::array();

  auto add = [&](const std::string& name, const WireFrame& f, json decoded) {
    auto bytes = encode_frame(f);
    std::ofstream(dir / (name + ".bin"), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    index.push_back({{"file", name + ".bin"},
                     {"size", bytes.size()},
                     {"version", f.version},
                     {"msg_type", msg_name(f.msg_type)},
                     {"core", f.core.value},
                     {"filter", f.filter.value},
                     {"t", f.t.millis},
                     {"payload_kind", f.payload_kind},
                     {"payload_len", f.payload.size()},
                     {"payload_hex", hex(f.payload)},
                     {"decoded", std::move(decoded)}});
  };
  auto data = [](std::uint64_t core, std::uint32_t filter, std::uint64_t t, Payload p) {
    return make_data_frame(StreamFrame{StreamKey{CoreId{core}, FilterId{filter}}, Timestamp{t}, std::move(p)});
  };

  WireFrame empty;
  empty.core = CoreId{0xA1};
  empty.filter = FilterId{1};
  empty.t = Timestamp{100000};
  empty.payload_kind = static_cast<std::uint16_t>(PayloadKind::ScalarVec);
  add("data_empty", empty, nullptr);

  add("pose2d", data(0xA1, 6, 100016, encode(Pose2D{1.5, -2.25, 0.5})),
      {{"x", 1.5}, {"y", -2.25}, {"theta", 0.5}});
  add("lidar2d", data(0xB2, 3, 100020, encode(Lidar2D{{1.5f, 2.25f, 0.125f, 30.0f}})),
      {{"ranges", {1.5, 2.25, 0.125, 30.0}}});
  add("lidar2d_empty", data(0xB2, 3, 100021, encode(Lidar2D{})), {{"ranges", json::array()}});

  ImageRaw img{4, 3, 1, {}};
  for (int i = 0; i < 12; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 20));
  add("image_raw", data(0xB2, 11, 100050, encode(img)),
      {{"width", 4}, {"height", 3}, {"channels", 1}, {"pixels_hex", hex(img.pixels)}});

  ImageRaw rgb{2, 2, 3, {255, 0, 0, 0, 255, 0, 0, 0, 255, 128, 128, 128}};
  add("image_rgb", data(0xB2, 12, 100051, encode(rgb)),
      {{"width", 2}, {"height", 2}, {"channels", 3}, {"pixels_hex", hex(rgb.pixels)}});

  OccupancyGrid grid{4, 4, 0.25f, {}};
  for (int i = 0; i < 16; ++i) grid.cells.push_back(i % 5 == 0 ? 255 : 0);
  add("occupancy_grid", data(0xA1, 7, 100100, encode(grid)),
      {{"width", 4}, {"height", 4}, {"cell_size", 0.25}, {"cells_hex", hex(grid.cells)}});

  add("command_goal", data(0xA1, 9, 100200, encode(Command{{{"goal_x", "12.5"}, {"goal_y", "-3"}}})),
      {{"fields", {{"goal_x", "12.5"}, {"goal_y", "-3"}}}});
  add("scalar_vec", data(0xA1, 200, 100300, encode(ScalarVec{{1, 51, 0, -0.5, 1e10}})),
      {{"values", {1.0, 51.0, 0.0, -0.5, 1e10}}});
  add("trajectory", data(0xA1, 4, 100400, encode(Trajectory{{{0.5, 1.0, 100420}, {0.75, 1.25, 100440}, {1.0, 1.5, 100460}}})),
      {{"points", {{{"x", 0.5}, {"y", 1.0}, {"t", 100420}},
                   {{"x", 0.75}, {"y", 1.25}, {"t", 100440}},
                   {{"x", 1.0}, {"y", 1.5}, {"t", 100460}}}}});

  add("subscribe", make_subscribe_frame(MsgType::Subscribe, CoreId{0xA1}, StreamKey{CoreId{0xB2}, FilterId{11}}),
      {{"subscriber", 0xA1}});
  add("unsubscribe", make_subscribe_frame(MsgType::Unsubscribe, CoreId{0xA1}, StreamKey{CoreId{0xB2}, FilterId{11}}),
      {{"subscriber", 0xA1}});
  {
    auto reject = make_control_frame(MsgType::Unsubscribe, StreamKey{CoreId{0xA1}, FilterId{9}}, Timestamp{100201});
    auto p = encode(Command{{{"error", "ValidationFailed"}, {"key", "goal_x"}}});
    reject.payload_kind = static_cast<std::uint16_t>(p.kind);
    reject.payload = p.bytes;
    add("command_reject", reject, {{"fields", {{"error", "ValidationFailed"}, {"key", "goal_x"}}}});
  }
  add("ping", make_control_frame(MsgType::Ping, StreamKey{CoreId{0xA1}, FilterId{1}}, Timestamp{123456789}), nullptr);
  add("pong", make_control_frame(MsgType::Pong, StreamKey{CoreId{0xB2}, FilterId{1}}, Timestamp{123456795}), nullptr);

  std::ofstream(dir / "index.json") << index.dump(2) << '\n';
  std::cout << "wrote " << index.size() << " frames to " << dir << '\n';
}
