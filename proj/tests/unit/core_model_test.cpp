#include <functional>
#include <map>
#include <random>
#include <unordered_map>

#include <gtest/gtest.h>

#include "ccx/core/error.hpp"
#include "ccx/core/payload.hpp"
#include "ccx/core/types.hpp"

using namespace ccx;

namespace {

FilterDescriptor local(std::uint32_t id, std::vector<StreamKey> inputs = {}) {
  return FilterDescriptor{FilterId{id}, "f" + std::to_string(id), "source.counter", 50, std::move(inputs), false, {}};
}

FilterDescriptor remote(std::uint32_t id, std::uint64_t core) {
  return FilterDescriptor{FilterId{id}, "r", "", 50, {}, true, {{"core", std::to_string(core)}}};
}

DataBlockDescriptor block() {
  DataBlockDescriptor d;
  d.core = CoreId{0xA1};
  d.filters = {local(1), local(2, {StreamKey{CoreId{0xA1}, FilterId{1}}}), remote(3, 0xB2),
               local(4, {StreamKey{CoreId{0xB2}, FilterId{3}}})};
  return d;
}

}  // namespace

TEST(CoreIdTest, ReservedAndWidth) {
  EXPECT_FALSE(CoreId{0}.valid());
  EXPECT_TRUE(CoreId{0xA1}.valid());
  EXPECT_TRUE(CoreId{0x0000FFFFFFFFFFFFull}.valid());
  EXPECT_FALSE(CoreId{0x0001000000000000ull}.valid());
  EXPECT_FALSE(FilterId{0}.valid());
}

TEST(StreamKeyTest, ParseAndPrint) {
  auto k = parse_stream_key("161:12");
  EXPECT_EQ(k.core.value, 161u);
  EXPECT_EQ(k.filter.value, 12u);
  EXPECT_EQ(to_string(k), "161:12");
  EXPECT_THROW(parse_stream_key("161"), Error);
  EXPECT_THROW(parse_stream_key("a:1"), Error);
}

TEST(StreamKeyTest, HashConsistentWithEquality) {
  std::mt19937_64 rng(7);
  std::unordered_map<StreamKey, int> map;
  std::map<StreamKey, int> oracle;
  for (int i = 0; i < 100000; ++i) {
    StreamKey k{CoreId{rng() % 64 + 1}, FilterId{static_cast<std::uint32_t>(rng() % 64 + 1)}};
    map[k] += 1;
    oracle[k] += 1;
    EXPECT_EQ(std::hash<StreamKey>{}(k), std::hash<StreamKey>{}(StreamKey{k.core, k.filter}));
  }
  ASSERT_EQ(map.size(), oracle.size());
  for (const auto& [k, n] : oracle) EXPECT_EQ(map.at(k), n);
}

TEST(ValidateDatablockTest, ValidDescriptorHasNoViolations) { EXPECT_TRUE(validate_datablock(block()).empty()); }

TEST(ValidateDatablockTest, TwoDistinctFilters) {
  DataBlockDescriptor d{CoreId{1}, {}, {local(1), local(2)}};
  EXPECT_TRUE(validate_datablock(d).empty());
}

TEST(ValidateDatablockTest, DuplicateId) {
  DataBlockDescriptor d{CoreId{1}, {}, {local(1), local(1)}};
  EXPECT_EQ(validate_datablock(d), std::vector<std::string>{"duplicate filter id 1"});
}

TEST(ValidateDatablockTest, RemoteWithInputs) {
  auto d = block();
  d.filters[2].inputs = {StreamKey{CoreId{0xA1}, FilterId{1}}};
  EXPECT_EQ(validate_datablock(d), std::vector<std::string>{"remote filter 3 declares inputs"});
}

TEST(ValidateDatablockTest, EachSingleViolationIsReportedAlone) {
  struct Case {
    std::function<void(DataBlockDescriptor&)> inject;
    std::string message;
  };
  std::vector<Case> cases = {
      {[](auto& d) { d.filters[0].dt_ms = 0; }, "filter 1 violates dt_ms > 0"},
      {[](auto& d) { d.filters[1].name = std::string(65, 'n'); }, "filter 2 name exceeds 64 chars"},
      {[](auto& d) {
         d.filters[2].params.clear();
         d.filters.pop_back();  // its only consumer
       },
       "remote filter 3 has no valid source core"},
      {[](auto& d) { d.filters[3].inputs.push_back(StreamKey{CoreId{0xC3}, FilterId{9}}); },
       "filter 4 input 195:9 is not available"},
      {[](auto& d) { d.filters[0].type_name.clear(); }, "filter 1 has no type"},
      {[](auto& d) { d.core = CoreId{0}; }, "core id is unassigned (0)"},
      {[](auto& d) { d.core = CoreId{1ull << 50}; }, "core id uses the high 16 bits"},
  };
  for (const auto& c : cases) {
    auto d = block();
    c.inject(d);
    if (d.core.value != 0xA1) {
      // Local input keys follow the core.
      d.filters[1].inputs = {StreamKey{d.core, FilterId{1}}};
    }
    EXPECT_EQ(validate_datablock(d), std::vector<std::string>{c.message});
  }
}

TEST(ValidateDatablockTest, KnownRemoteKeysSatisfyInputs) {
  DataBlockDescriptor d{CoreId{1}, {}, {local(1, {StreamKey{CoreId{2}, FilterId{5}}})}};
  EXPECT_EQ(validate_datablock(d).size(), 1u);
  EXPECT_TRUE(validate_datablock(d, {StreamKey{CoreId{2}, FilterId{5}}}).empty());
}

TEST(ValidateDatablockTest, OrderedByFilterIdThenRule) {
  DataBlockDescriptor d{CoreId{1}, {}, {local(5), local(2), local(5)}};
  d.filters[0].dt_ms = 0;
  d.filters[1].dt_ms = 0;
  auto v = validate_datablock(d);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], "filter 2 violates dt_ms > 0");
  EXPECT_EQ(v[1], "filter 5 violates dt_ms > 0");
  EXPECT_EQ(v[2], "duplicate filter id 5");
}

TEST(PayloadTest, ZeroPoseRoundtrip) {
  auto p = encode(Pose2D{0, 0, 0});
  EXPECT_EQ(p.bytes.size(), 24u);
  EXPECT_EQ(canonical_payload_roundtrip(p), p);
}

TEST(PayloadTest, EmptyLidarIsCountHeader) {
  auto p = encode(Lidar2D{});
  EXPECT_EQ(p.bytes, (Bytes{0, 0, 0, 0}));
  EXPECT_EQ(canonical_payload_roundtrip(p), p);
}

TEST(PayloadTest, RandomPoseRoundtrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    Pose2D pose{u(rng), u(rng), u(rng)};
    auto p = encode(pose);
    auto again = canonical_payload_roundtrip(p);
    ASSERT_EQ(again.bytes, p.bytes);
    ASSERT_EQ(decode_pose2d(again), pose);
  }
}

TEST(PayloadTest, EveryKindRoundtrips) {
  std::vector<Payload> all = {
      encode(Pose2D{1, 2, 3}),
      encode(Lidar2D{{1.f, 2.5f, 0.f}}),
      encode(ImageRaw{2, 2, 3, Bytes(12, 7)}),
      encode(OccupancyGrid{3, 2, 0.5f, Bytes{0, 255, 0, 255, 0, 128}}),
      encode(Command{{{"goal_x", "1.5"}, {"a", "b"}}}),
      encode(ScalarVec{{1, -2, 3.5}}),
      encode(Trajectory{{{1, 2, 10}, {3, 4, 20}}}),
  };
  for (const auto& p : all) {
    EXPECT_EQ(canonical_payload_roundtrip(p), p) << kind_name(p.kind);
    EXPECT_FALSE(summarize(p).empty());
  }
  EXPECT_EQ(decode_command(all[4]).fields.at("goal_x"), "1.5");
  EXPECT_EQ(decode_grid(all[3]).at(1, 0), 255);
  EXPECT_EQ(decode_grid(all[3]).at(2, 1), 128);
}

TEST(PayloadTest, ByteLayouts) {
  auto img = encode(ImageRaw{2, 1, 1, Bytes{9, 8}});
  EXPECT_EQ(img.bytes, (Bytes{0, 2, 0, 1, 1, 9, 8}));
  auto sv = encode(ScalarVec{{1.0}});
  EXPECT_EQ(sv.bytes, (Bytes{0, 0, 0, 1, 0x3f, 0xf0, 0, 0, 0, 0, 0, 0}));
}

TEST(PayloadTest, MalformedPayloads) {
  EXPECT_THROW(decode_pose2d(Payload{PayloadKind::Pose2D, Bytes(23, 0)}), MalformedPayload);
  EXPECT_THROW(decode_pose2d(Payload{PayloadKind::Pose2D, Bytes(25, 0)}), MalformedPayload);
  EXPECT_THROW(decode_pose2d(encode(ScalarVec{})), MalformedPayload);
  EXPECT_THROW(decode_lidar2d(Payload{PayloadKind::Lidar2D, Bytes{0, 0, 0, 2, 0, 0, 0, 0}}), MalformedPayload);
  EXPECT_THROW(decode_image(Payload{PayloadKind::ImageRaw, Bytes{0, 2, 0, 2, 1, 0}}), MalformedPayload);
  EXPECT_THROW(canonical_payload_roundtrip(Payload{static_cast<PayloadKind>(99), {}}), MalformedPayload);
  Payload cmd{PayloadKind::Command, {}};
  ByteWriter(cmd.bytes).u32(3);
  ByteWriter(cmd.bytes).raw(std::string_view("abc"));
  EXPECT_THROW(decode_command(cmd), MalformedPayload);
}

TEST(PayloadTest, KindRange) {
  EXPECT_FALSE(is_payload_kind(0));
  for (std::uint16_t k = 1; k <= 7; ++k) EXPECT_TRUE(is_payload_kind(k));
  EXPECT_FALSE(is_payload_kind(8));
}
