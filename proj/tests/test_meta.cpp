#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mpsim/error.hpp"
#include "mpsim/meta.hpp"

using namespace mpsim;

namespace {
ReceivedSegment segment(std::uint64_t dsn, std::uint32_t len) { return {dsn, len, segmentChecksum(dsn, len)}; }
}  // namespace

TEST(MetaSender, RetransmissionQueueHasPriority) {
  MetaSender s(kDefaultBufCap);
  for (int i = 0; i < 5; ++i) s.nextPayload(100);
  s.onSubflowTimeout({100, 100, segmentChecksum(100, 100)});
  const DsnRange r = s.nextPayload(1448);
  EXPECT_EQ(r.dsn, 100u);
  EXPECT_EQ(r.len, 100u);
  const DsnRange n = s.nextPayload(1448);
  EXPECT_EQ(n.dsn, 500u);
  EXPECT_EQ(n.len, 1448u);
}

TEST(MetaSender, NothingToSendWhenWindowClosed) {
  MetaSender s(kDefaultBufCap, 1000);
  s.nextPayload(1448);
  EXPECT_THROW(s.nextPayload(1448), NothingToSend);
  MetaSender w(kDefaultBufCap);
  w.onDataAck(0, 0);
  EXPECT_THROW(w.nextPayload(1448), NothingToSend);
}

TEST(MetaSender, TimeoutNotificationsDedupAndSkipAcked) {
  MetaSender s(kDefaultBufCap);
  s.nextPayload(1448);
  s.nextPayload(1448);
  const DsnRange r{0, 1448, segmentChecksum(0, 1448)};
  s.onSubflowTimeout(r);
  EXPECT_EQ(s.rtxQueueSize(), 1u);
  s.onSubflowTimeout(r);
  EXPECT_EQ(s.rtxQueueSize(), 1u);
  s.onDataAck(1448, kDefaultBufCap);
  EXPECT_EQ(s.rtxQueueSize(), 0u);
  s.onSubflowTimeout(r);
  EXPECT_EQ(s.rtxQueueSize(), 0u);
}

TEST(MetaSender, WindowEdgeFollowsDataAck) {
  MetaSender s(10000);
  s.onDataAck(0, 3000);
  EXPECT_EQ(s.sendWindow(), 3000u);
  s.nextPayload(1448);
  s.nextPayload(1448);
  EXPECT_EQ(s.nextPayload(1448).len, 104u);
  EXPECT_TRUE(s.windowBlocked());
  s.onDataAck(1448, 3000);
  EXPECT_EQ(s.sendWindow(), 1448u);
  s.onDataAck(100, 9000);  // stale
  EXPECT_EQ(s.dataAcked(), 1448u);
}

TEST(MetaReceiver, InOrderArrivalDelivers) {
  MetaReceiver r(kDefaultBufCap);
  EXPECT_EQ(r.onSegment(segment(0, 1448), 0), 1448u);
  EXPECT_EQ(r.dataAck(), 1448u);
  EXPECT_EQ(r.ofoBytes(), 0u);
}

TEST(MetaReceiver, GapIsHeldThenDrained) {
  MetaReceiver r(kDefaultBufCap);
  EXPECT_EQ(r.onSegment(segment(1448, 1448), 1), 0u);
  EXPECT_EQ(r.ofoBytes(), 1448u);
  EXPECT_EQ(r.dataAck(), 0u);
  EXPECT_EQ(r.onSegment(segment(0, 1448), 0), 2896u);
  EXPECT_EQ(r.deliveredBytes(), 2896u);
  EXPECT_EQ(r.ofoBytes(), 0u);
  EXPECT_EQ(r.deliveredBy(0), 1448u);
  EXPECT_EQ(r.deliveredBy(1), 1448u);
}

TEST(MetaReceiver, DuplicatesAreCountedNotDelivered) {
  MetaReceiver r(kDefaultBufCap);
  r.onSegment(segment(0, 1448), 0);
  EXPECT_EQ(r.onSegment(segment(0, 1448), 1), 0u);
  r.onSegment(segment(2896, 1448), 0);
  r.onSegment(segment(2896, 1448), 1);
  EXPECT_EQ(r.duplicateBytes(), 2896u);
  EXPECT_EQ(r.ofoBytes(), 1448u);
}

TEST(MetaReceiver, AdvertisedWindow) {
  MetaReceiver r(kDefaultBufCap);
  EXPECT_EQ(r.advertise(0), 16u * 1024 * 1024);
  for (std::uint64_t d = 1024 * 1024; d < 2 * 1024 * 1024; d += 1024) r.onSegment(segment(d, 1024), 0);
  EXPECT_EQ(r.ofoBytes(), 1024u * 1024);
  EXPECT_EQ(r.advertise(0), 15u * 1024 * 1024);
  EXPECT_EQ(r.advertise(512), 15u * 1024 * 1024 - 512);
}

TEST(MetaReceiver, SegmentsBeyondWindowThrow) {
  MetaReceiver r(4096);
  EXPECT_THROW(r.onSegment(segment(4000, 200), 0), WindowOverflow);
}

TEST(Meta, BufferCapacityStaysAt16MiBForDeskScenarios) {
  EXPECT_EQ(bufferCapacity({100e6, 100e6}, milliseconds(50)), kDefaultBufCap);
  // 2 * (2 Gbps) * 100 ms = 50 MB
  EXPECT_EQ(bufferCapacity({1e9, 1e9}, milliseconds(100)), 50'000'000u);
}

// Any arrival order, with duplicates, yields the source stream exactly once.
TEST(MetaReceiver, ShuffledArrivalsReassembleExactly) {
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint64_t total = std::uniform_int_distribution<std::uint64_t>(1, 200'000)(g);
    std::vector<ReceivedSegment> segs;
    for (std::uint64_t d = 0; d < total; d += 1448) segs.push_back(segment(d, static_cast<std::uint32_t>(std::min<std::uint64_t>(1448, total - d))));
    std::vector<ReceivedSegment> arrivals = segs;
    for (int i = 0; i < 20; ++i) arrivals.push_back(segs[std::uniform_int_distribution<std::size_t>(0, segs.size() - 1)(g)]);
    std::shuffle(arrivals.begin(), arrivals.end(), g);
    MetaReceiver r(kDefaultBufCap);
    for (const auto& s : arrivals) r.onSegment(s, static_cast<int>(s.dsn % 2));
    ASSERT_EQ(r.deliveredBytes(), total);
    ASSERT_EQ(r.sinkDigest(), expectedDigest(total, 1448));
    ASSERT_EQ(r.checksumErrors(), 0u);
    ASSERT_EQ(r.ofoBytes(), 0u);
  }
}
