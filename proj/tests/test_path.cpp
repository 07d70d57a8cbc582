#include <gtest/gtest.h>

#include "mpsim/error.hpp"
#include "mpsim/path.hpp"

using namespace mpsim;

TEST(Path, SerializationOfFullFrameAt100Mbps) {
  EXPECT_EQ(serializationTime(100e6, 1514), microseconds(121) + 120);
  PathConfig cfg{100e6, 0, 0, 64};
  Link l("L1", cfg, 1);
  const EnqueueResult r = l.enqueue(milliseconds(3), 1514);
  ASSERT_TRUE(r.accepted());
  EXPECT_EQ(r.delivery_at, milliseconds(3) + 121'120);
}

TEST(Path, BackToBackFramesQueueBehindEachOther) {
  Link l("L1", PathConfig{100e6, milliseconds(5), 0, 64}, 1);
  const TimeNs tx = serializationTime(100e6, 1514);
  EXPECT_EQ(l.enqueue(0, 1514).delivery_at, tx + milliseconds(5));
  EXPECT_EQ(l.enqueue(0, 1514).delivery_at, 2 * tx + milliseconds(5));
  EXPECT_EQ(l.queueLength(0), 2u);
  EXPECT_EQ(l.queueLength(tx), 1u);
}

TEST(Path, FullQueueDrops) {
  Link l("L1", PathConfig{1e6, 0, 0, 3}, 1);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(l.enqueue(0, 1514).accepted());
  EXPECT_EQ(l.enqueue(0, 1514).outcome, EnqueueOutcome::DroppedFull);
  EXPECT_EQ(l.dropsFull(), 1u);
}

TEST(Path, CertainLossDropsEverything) {
  Link l("L2", PathConfig{100e6, 0, 1.0, 64}, 1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(l.enqueue(i * kNsPerMs, 1514).outcome, EnqueueOutcome::DroppedLoss);
  EXPECT_EQ(l.dropsLoss(), 100u);
}

TEST(Path, LossIsReproducible) {
  auto pattern = [](std::uint64_t seed) {
    Link l("L2", PathConfig{100e6, 0, 0.3, 64}, seed);
    std::string s;
    for (int i = 0; i < 200; ++i) s += l.enqueue(i * kNsPerMs, 1514).accepted() ? '.' : 'x';
    return s;
  };
  EXPECT_EQ(pattern(4), pattern(4));
  EXPECT_NE(pattern(4), pattern(5));
}

TEST(Path, Routes) {
  using A = std::array<LinkId, 2>;
  EXPECT_EQ(route(Direction::Forward, 1), (A{LinkId::L1, LinkId::L3}));
  EXPECT_EQ(route(Direction::Forward, 2), (A{LinkId::L2, LinkId::L3}));
  EXPECT_EQ(route(Direction::Reverse, 1), (A{LinkId::L3, LinkId::L1}));
  EXPECT_EQ(route(Direction::Reverse, 2), (A{LinkId::L3, LinkId::L2}));
  EXPECT_THROW(route(Direction::Forward, 3), UnknownSubflow);
  EXPECT_THROW(route(Direction::Forward, 0), UnknownSubflow);
}

TEST(Path, MakePathFromScenarioFigures) {
  const PathConfig p = makePath(50, 20, 0.5);
  EXPECT_DOUBLE_EQ(p.rate_bps, 50e6);
  EXPECT_EQ(p.one_way_delay, milliseconds(10));
  EXPECT_DOUBLE_EQ(p.loss_rate, 0.005);
  EXPECT_GE(p.queue_cap, kMinQueueCap);
  EXPECT_EQ(makePath(100, 0, 0).one_way_delay, kNsPerUs);
  // 1 Gbps at 100 ms is about 8256 full frames.
  EXPECT_EQ(makePath(1000, 100, 0).queue_cap, 8257u);
}

TEST(Path, OutOfRangeConfigsRejected) {
  EXPECT_THROW(makePath(0, 5, 0), RangeError);
  EXPECT_THROW(makePath(100, -1, 0), RangeError);
  EXPECT_THROW(makePath(100, 5, -1), RangeError);
  EXPECT_THROW(makePath(100, 5, 101), RangeError);
  EXPECT_THROW(validate(PathConfig{100e6, 0, 1.5, 64}), RangeError);
  EXPECT_THROW(validate(PathConfig{100e6, -1, 0, 64}), RangeError);
  EXPECT_THROW(validate(PathConfig{100e6, 0, 0, 0}), RangeError);
}

TEST(Path, AckLatencyFollowsReverseRoute) {
  Topology t(PathConfig{100e6, milliseconds(5), 0, 64}, PathConfig{50e6, milliseconds(10), 0, 64},
             PathConfig{2e9, 0, 0, 64}, 1);
  EXPECT_EQ(t.ackLatency(1), milliseconds(5) + serializationTime(100e6, kAckWireBytes) + serializationTime(2e9, kAckWireBytes));
  EXPECT_EQ(t.ackLatency(2), milliseconds(10) + serializationTime(50e6, kAckWireBytes) + serializationTime(2e9, kAckWireBytes));
}
