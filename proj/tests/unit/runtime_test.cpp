#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "ccx/core/payload.hpp"
#include "ccx/runtime/block.hpp"
#include "ccx/runtime/builtin.hpp"
#include "ccx/signaling/server.hpp"
#include "ccx/transport/loopback.hpp"
#include "ccx/transport/wire.hpp"
#include "test_support.hpp"

using namespace ccx;
using namespace std::chrono_literals;

namespace {

constexpr CoreId kCore{0x16};

FilterDescriptor local(std::uint32_t id, const std::string& type, std::uint32_t dt, std::vector<StreamKey> inputs = {},
                       Params params = {}) {
  return FilterDescriptor{FilterId{id}, "f" + std::to_string(id), type, dt, std::move(inputs), false,
                          std::move(params)};
}

FilterDescriptor remote(std::uint32_t id, CoreId source) {
  return FilterDescriptor{FilterId{id}, "r" + std::to_string(id), "", 20, {}, true,
                          {{"core", std::to_string(source.value)}}};
}

StreamKey key(std::uint32_t id, CoreId core = kCore) { return StreamKey{core, FilterId{id}}; }

double scalar(const Tam& tam, const StreamKey& k, Timestamp t) {
  return decode_scalar_vec(tam.query_at_or_before(k, t).payload).values.at(0);
}

class SteppedBlock : public ::testing::Test {
 protected:
  std::unique_ptr<RunningBlock> start(std::vector<FilterDescriptor> filters) {
    DataBlockDescriptor d{kCore, Timestamp{0}, std::move(filters)};
    RuntimeOptions o;
    o.clock = clock;
    o.scheduling = Scheduling::Stepped;
    return start_datablock(d, registry, tam, channel, o);
  }

  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(1000);
  FilterRegistry registry = default_registry();
  LoopbackChannel channel;
  Tam tam;
};

}  // namespace

TEST_F(SteppedBlock, TicksOnDeadlines) {
  auto block = start({local(1, "source.counter", 50, {}, {{"start", "7"}})});
  block->advance_to(Timestamp{1500});
  auto entries = tam.entries(key(1));
  ASSERT_EQ(entries.size(), 11u);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    EXPECT_EQ(entries[i].t.millis, 1000 + 50 * i);
    EXPECT_EQ(decode_scalar_vec(entries[i].payload).values, std::vector<double>{7.0 + double(i)});
  }
  auto s = block->stats().find(FilterId{1});
  EXPECT_EQ(s->ticks, 11u);
  EXPECT_EQ(s->outputs, 11u);
  EXPECT_DOUBLE_EQ(s->mean_period_ms, 50.0);
  EXPECT_DOUBLE_EQ(s->stddev_period_ms, 0.0);
  EXPECT_EQ(s->state, FilterState::Running);

  auto ticks = block->clock_log(FilterId{1})->ticks();
  ASSERT_EQ(ticks.size(), 11u);
  EXPECT_EQ(ticks.back().start.millis, 1500u);
  auto summary = summarize(ticks);
  EXPECT_DOUBLE_EQ(summary.mean_period_ms, 50.0);
  EXPECT_NEAR(summary.ticks_per_s, 20.0, 1e-9);
  block->advance_to(Timestamp{1400});
  EXPECT_EQ(tam.entries(key(1)).size(), 11u);
}

TEST_F(SteppedBlock, TiesRunInDescriptorOrder) {
  auto block = start({local(1, "source.counter", 50), local(2, "transform.passthrough", 100, {key(1)})});
  block->advance_to(Timestamp{2000});
  for (const auto& e : tam.entries(key(2))) {
    EXPECT_EQ(decode_scalar_vec(e.payload).values.at(0), scalar(tam, key(1), e.t)) << e.t.millis;
    EXPECT_EQ(tam.query_at_or_before(key(1), e.t).t, e.t);
  }
  EXPECT_EQ(tam.entries(key(2)).size(), 11u);
}

TEST_F(SteppedBlock, StaleInputsSkipAgainstOracle) {
  auto block = start({local(1, "source.counter", 100), local(2, "transform.passthrough", 10, {key(1)})});
  const std::uint64_t end = 3000;
  block->advance_to(Timestamp{end});

  std::uint64_t ok = 0, skipped = 0;
  for (std::uint64_t t = 1000; t <= end; t += 10) {
    std::uint64_t newest = 1000 + (t - 1000) / 100 * 100;
    (t - newest > 20 ? skipped : ok) += 1;
  }
  auto s = block->stats().find(FilterId{2});
  EXPECT_EQ(s->ticks, ok);
  EXPECT_EQ(s->skipped, skipped);
  EXPECT_EQ(block->clock_log(FilterId{2})->skipped(), skipped);
  EXPECT_EQ(block->clock_log(FilterId{2})->total(), ok);
  EXPECT_EQ(tam.entries(key(2)).size(), ok);
}

TEST_F(SteppedBlock, HoldStaleReusesLastTuple) {
  auto block = start({local(1, "source.counter", 100),
                      local(2, "transform.passthrough", 10, {key(1)}, {{"on_stale", "hold"}, {"capacity", "512"}})});
  block->advance_to(Timestamp{1500});
  auto s = block->stats().find(FilterId{2});
  EXPECT_EQ(s->skipped, 0u);
  EXPECT_EQ(s->ticks, 51u);
  EXPECT_EQ(scalar(tam, key(2), Timestamp{1090}), 0.0);
}

TEST_F(SteppedBlock, MissingInputSkips) {
  auto block = start({local(9, "command.input", 1000), local(2, "transform.passthrough", 50, {key(9)})});
  block->advance_to(Timestamp{1200});
  EXPECT_EQ(block->stats().find(FilterId{2})->skipped, 5u);
  EXPECT_EQ(block->stats().find(FilterId{9})->ticks, 0u);
  EXPECT_EQ(block->clock_log(FilterId{2})->skipped(), 5u);
}

TEST_F(SteppedBlock, FaultIsolatesOneFilter) {
  auto block = start({local(1, "source.counter", 50), local(3, "fault.divide", 50, {}, {{"fault_at", "3"}})});
  block->advance_to(Timestamp{1500});
  auto stats = block->stats();
  EXPECT_EQ(stats.find(FilterId{3})->state, FilterState::Faulted);
  EXPECT_EQ(stats.find(FilterId{3})->ticks, 2u);
  EXPECT_FALSE(stats.find(FilterId{3})->fault.empty());
  EXPECT_EQ(stats.find(FilterId{1})->state, FilterState::Running);
  EXPECT_EQ(stats.find(FilterId{1})->ticks, 11u);
  EXPECT_EQ(block->state(FilterId{3}), FilterState::Faulted);

  auto final = block->stop();
  EXPECT_EQ(final.find(FilterId{1})->state, FilterState::Stopped);
  EXPECT_EQ(final.find(FilterId{3})->state, FilterState::Faulted);
  EXPECT_EQ(block->stop().find(FilterId{1})->ticks, 11u);
}

TEST_F(SteppedBlock, DiagFilterReportsClockSignals) {
  auto block = start({local(1, "source.counter", 50), local(2, "transform.passthrough", 10, {key(1)}),
                      local(200, "diag.clock_signals", 100)});
  block->advance_to(Timestamp{1300});
  auto rows = decode_scalar_vec(tam.query_at_or_before(key(200), Timestamp{1300}).payload).values;
  ASSERT_EQ(rows.size(), 12u);
  auto stats = block->stats();
  for (std::size_t r = 0; r < rows.size(); r += 6) {
    auto id = FilterId{static_cast<std::uint32_t>(rows[r])};
    auto* s = stats.find(id);
    ASSERT_NE(s, nullptr);
    EXPECT_EQ(rows[r + 1], double(s->ticks));
    EXPECT_EQ(rows[r + 2], double(s->skipped));
    EXPECT_EQ(rows[r + 3], 1300.0);
    EXPECT_EQ(rows[r + 5], double(static_cast<int>(FilterState::Running)));
  }
}

TEST(RuntimeStartTest, RejectsInvalidBlocks) {
  FilterRegistry registry = default_registry();
  LoopbackChannel channel;
  Tam tam;
  DataBlockDescriptor bad{kCore, {}, {local(1, "source.counter", 0)}};
  try {
    start_datablock(bad, registry, tam, channel);
    FAIL();
  } catch (const InvalidDataBlock& e) {
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_NE(std::string(e.what()).find("dt_ms > 0"), std::string::npos);
  }
  DataBlockDescriptor unknown{kCore, {}, {local(1, "no.such.type", 50)}};
  EXPECT_THROW(start_datablock(unknown, registry, tam, channel), UnknownFilterType);
}

TEST(RuntimeStartTest, RegistrationFailedWhenNoServerAnswers) {
  FilterRegistry registry = default_registry();
  LoopbackChannel channel;
  Tam tam;
  DataBlockDescriptor d{kCore, {}, {local(1, "source.counter", 50)}};
  RuntimeOptions o;
  o.signaling = ServerSet{{"127.0.0.1:1", "127.0.0.1:2"}};
  o.signaling_timeout = 200ms;
  try {
    start_datablock(d, registry, tam, channel, o);
    FAIL();
  } catch (const RegistrationFailed& e) {
    EXPECT_NE(std::string(e.what()).find("127.0.0.1:2"), std::string::npos);
  }
}

TEST(RuntimeStartTest, PartialRegistrationStillStarts) {
  SignalingServer up(SignalingServerOptions{});
  FilterRegistry registry = default_registry();
  LoopbackChannel channel;
  Tam tam;
  DataBlockDescriptor d{kCore, {}, {local(1, "source.counter", 50)}};
  RuntimeOptions o;
  o.signaling = ServerSet{{"127.0.0.1:1", up.address()}};
  o.signaling_timeout = 200ms;
  auto block = start_datablock(d, registry, tam, channel, o);
  ASSERT_EQ(up.fresh_records().size(), 1u);
  EXPECT_EQ(up.fresh_records()[0].address, block->address());
  EXPECT_EQ(up.fresh_records()[0].filters.at(0).payload_kind, static_cast<std::uint16_t>(PayloadKind::ScalarVec));
  block->stop();
  EXPECT_TRUE(up.fresh_records().empty());
}

TEST(RuntimeThreadedTest, SamplesAtDt) {
  FilterRegistry registry = default_registry();
  LoopbackChannel channel;
  Tam tam;
  DataBlockDescriptor d{kCore, {}, {local(1, "source.counter", 20, {}, {{"capacity", "1000"}})}};
  auto block = start_datablock(d, registry, tam, channel);
  EXPECT_THROW(block->advance_to(Timestamp{0}), Error);
  std::this_thread::sleep_for(600ms);
  auto stats = block->stop();
  auto* s = stats.find(FilterId{1});
  EXPECT_GE(s->ticks, 20u);
  EXPECT_LE(s->ticks, 32u);
  EXPECT_NEAR(s->mean_period_ms, 20.0, 2.0);
  auto entries = tam.entries(key(1));
  for (std::size_t i = 1; i < entries.size(); ++i) {
    EXPECT_LT(entries[i - 1].t, entries[i].t);
  }
  EXPECT_EQ(s->state, FilterState::Stopped);
}

namespace {

struct Injector : SteppedBlock {};

}  // namespace

TEST_F(Injector, DirectInjection) {
  auto block = start({local(1, "source.counter", 50), local(9, "command.input", 1000, {}, {{"required", "x,y"}})});
  Command ok;
  ok.fields = {{"x", "1"}, {"y", "2"}};
  Timestamp at;
  auto r = block->inject(FilterId{9}, encode(ok), &at);
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(at.millis, 1000u);
  EXPECT_EQ(decode_command(tam.query_at_or_before(key(9), at).payload), ok);
  block->inject(FilterId{9}, encode(ok), &at);
  EXPECT_EQ(at.millis, 1001u);

  Command partial;
  partial.fields = {{"x", "1"}};
  r = block->inject(FilterId{9}, encode(partial));
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.error, "ValidationFailed");
  EXPECT_EQ(r.key, "y");
  EXPECT_EQ(block->inject(FilterId{9}, encode(ScalarVec{})).error, "WrongPayloadKind");
  EXPECT_EQ(block->inject(FilterId{1}, encode(ok)).error, "NotCommandTarget");
  EXPECT_EQ(block->inject(FilterId{77}, encode(ok)).error, "UnknownTarget");
  auto stats = block->stats();
  EXPECT_EQ(stats.injected, 2u);
  EXPECT_EQ(stats.injections_rejected, 4u);
  EXPECT_EQ(tam.entries(key(9)).size(), 2u);
}

TEST_F(Injector, OverTheWire) {
  auto block = start({local(9, "command.input", 1000, {}, {{"required", "goal_x"}})});
  auto conn = channel.connect(block->address());

  Command ok;
  ok.fields = {{"goal_x", "3"}};
  conn->send(make_data_frame(StreamFrame{key(9), Timestamp{0}, encode(ok)}));
  auto ack = conn->receive();
  ASSERT_TRUE(ack);
  EXPECT_EQ(ack->msg_type, MsgType::Data);
  EXPECT_EQ(ack->key(), key(9));
  EXPECT_EQ(ack->t.millis, 1000u);
  EXPECT_EQ(ack->payload, encode(ok).bytes);

  Command bad;
  bad.fields = {{"goal_y", "3"}};
  conn->send(make_data_frame(StreamFrame{key(9), Timestamp{0}, encode(bad)}));
  auto reject = conn->receive();
  ASSERT_TRUE(reject);
  EXPECT_EQ(reject->msg_type, MsgType::Unsubscribe);
  ASSERT_EQ(reject->payload_kind, static_cast<std::uint16_t>(PayloadKind::Command));
  auto why = decode_command(Payload{PayloadKind::Command, reject->payload});
  EXPECT_EQ(why.fields.at("error"), "ValidationFailed");
  EXPECT_EQ(why.fields.at("key"), "goal_x");

  conn->send(make_data_frame(StreamFrame{key(9, CoreId{0x99}), Timestamp{0}, encode(ok)}));
  auto foreign = conn->receive();
  ASSERT_TRUE(foreign);
  EXPECT_EQ(decode_command(Payload{PayloadKind::Command, foreign->payload}).fields.at("error"), "UnknownTarget");
  EXPECT_EQ(tam.entries(key(9)).size(), 1u);
}

class MirroringTest : public ::testing::TestWithParam<std::string> {
 protected:
  std::unique_ptr<DataChannel> channel = test::make_channel(GetParam());
  std::string listen() const { return GetParam() == "socket" ? "127.0.0.1:0" : ""; }
  FilterRegistry registry = default_registry();
};

TEST_P(MirroringTest, RemoteStreamIsMirroredBitExact) {
  const CoreId a{0xA1}, b{0xB2};
  Tam tam_a, tam_b;
  RuntimeOptions oa;
  oa.listen = listen();
  DataBlockDescriptor da{a, {}, {local(1, "source.image_pattern", 20, {}, {{"width", "8"}, {"height", "4"}})}};
  auto block_a = start_datablock(da, registry, tam_a, *channel, oa);

  RuntimeOptions ob;
  ob.listen = listen();
  ob.static_peers[a] = block_a->address();
  DataBlockDescriptor db{b, {}, {remote(1, a), local(2, "transform.passthrough", 20, {key(1, a)})}};
  auto block_b = start_datablock(db, registry, tam_b, *channel, ob);

  ASSERT_TRUE(test::wait_until([&] { return tam_b.entries(key(1, a)).size() >= 10; }, 5000ms));
  EXPECT_TRUE(block_b->links_connected());
  EXPECT_EQ(block_a->active_subscriptions(), 1u);
  ASSERT_TRUE(test::wait_until([&] { return !tam_b.entries(key(2, b)).empty(); }, 5000ms));

  auto stats = block_b->stop();
  block_a->stop();
  auto* r = stats.find(FilterId{1});
  EXPECT_TRUE(r->is_remote);
  EXPECT_GE(r->mirrored, 10u);
  EXPECT_EQ(r->duplicates, 0u);
  EXPECT_EQ(r->offset_ms, 0);

  auto mirrored = tam_b.entries(key(1, a));
  for (const auto& e : mirrored) {
    auto original = tam_a.query_at_or_before(key(1, a), e.t);
    EXPECT_EQ(original.t, e.t);
    EXPECT_EQ(original.payload, e.payload);
  }
  for (std::size_t i = 1; i < mirrored.size(); ++i) EXPECT_LT(mirrored[i - 1].t, mirrored[i].t);
}

TEST_P(MirroringTest, SkewedPeerClockIsCompensated) {
  const CoreId a{0xA1}, b{0xB2};
  Tam tam_a, tam_b;
  RuntimeOptions oa;
  oa.listen = listen();
  oa.clock = std::make_shared<SystemClock>(5000);
  auto block_a = start_datablock(DataBlockDescriptor{a, {}, {local(1, "source.counter", 20)}}, registry, tam_a,
                                 *channel, oa);
  RuntimeOptions ob;
  ob.listen = listen();
  ob.clock = std::make_shared<SystemClock>(0);
  ob.static_peers[a] = block_a->address();
  auto block_b = start_datablock(DataBlockDescriptor{b, {}, {remote(1, a)}}, registry, tam_b, *channel, ob);
  ASSERT_TRUE(test::wait_until([&] { return tam_b.entries(key(1, a)).size() >= 5; }, 5000ms));
  auto stats = block_b->stop();
  block_a->stop();
  auto offset = stats.find(FilterId{1})->offset_ms;
  EXPECT_NEAR(double(offset), 5000.0, 20.0);
  auto a_first = tam_a.entries(key(1, a));
  auto b_first = tam_b.entries(key(1, a));
  auto v = decode_scalar_vec(b_first.front().payload).values.at(0);
  for (const auto& e : a_first) {
    if (decode_scalar_vec(e.payload).values.at(0) == v) {
      EXPECT_EQ(std::int64_t(e.t.millis) - offset, std::int64_t(b_first.front().t.millis));
    }
  }
}

TEST_P(MirroringTest, UnreachablePeer) {
  Tam tam;
  RuntimeOptions o;
  o.listen = listen();
  o.static_peers[CoreId{0xDEAD}] = GetParam() == "socket" ? "127.0.0.1:1" : "missing-peer";
  o.link_retry = 20ms;
  auto block = start_datablock(DataBlockDescriptor{kCore, {}, {local(1, "source.counter", 50)}}, registry, tam,
                               *channel, o);
  EXPECT_THROW(block->mirror_remote(key(1, CoreId{0xDEAD}), 200ms), PeerUnreachable);
  EXPECT_THROW(block->mirror_remote(key(1)), Error);
}

TEST_P(MirroringTest, DiscoveryThroughSignaling) {
  if (GetParam() != "socket") GTEST_SKIP() << "signaling addresses are socket addresses";
  SignalingServer server(SignalingServerOptions{});
  const CoreId a{0xA1}, b{0xB2};
  Tam tam_a, tam_b;
  RuntimeOptions oa;
  oa.listen = listen();
  oa.signaling = ServerSet{{server.address()}};
  auto block_a = start_datablock(DataBlockDescriptor{a, {}, {local(1, "source.counter", 20)}}, registry, tam_a,
                                 *channel, oa);
  RuntimeOptions ob = oa;
  auto block_b = start_datablock(DataBlockDescriptor{b, {}, {local(5, "source.counter", 50)}}, registry, tam_b,
                                 *channel, ob);
  block_b->mirror_remote(key(1, a));
  ASSERT_TRUE(test::wait_until([&] { return tam_b.entries(key(1, a)).size() >= 3; }, 5000ms));
  block_b->stop();
  block_a->stop();
}

INSTANTIATE_TEST_SUITE_P(Transports, MirroringTest, ::testing::Values("loopback", "socket"));
