#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "mpsim/rng.hpp"
#include "mpsim/time.hpp"

namespace mpsim {

constexpr std::uint32_t kWireMss = 1514;
constexpr std::uint32_t kPayloadMss = 1448;
constexpr std::uint32_t kAckWireBytes = 66;
constexpr std::uint32_t kMinQueueCap = 64;

struct PathConfig {
  double rate_bps = 100e6;
  TimeNs one_way_delay = kNsPerMs;
  double loss_rate = 0.0;
  std::uint32_t queue_cap = kMinQueueCap;
};

// Builds a link from the round-trip figures used in scenario tables.
// RTT is split evenly per direction, 0 ms becomes 1 us, and the queue holds
// one BDP worth of full-size frames (at least 64).
PathConfig makePath(double rate_mbps, double rtt_ms, double loss_pct);

// Throws RangeError when a field is out of its domain.
void validate(const PathConfig& cfg);

TimeNs serializationTime(double rate_bps, std::uint32_t bytes);

enum class EnqueueOutcome { Accepted, DroppedFull, DroppedLoss };

struct EnqueueResult {
  EnqueueOutcome outcome = EnqueueOutcome::Accepted;
  TimeNs delivery_at = 0;
  bool accepted() const { return outcome == EnqueueOutcome::Accepted; }
};

class Link {
 public:
  Link(std::string name, const PathConfig& cfg, std::uint64_t seed);

  const std::string& name() const { return name_; }
  const PathConfig& config() const { return cfg_; }

  // Drop-tail admission, then the loss draw, then FIFO service.
  EnqueueResult enqueue(TimeNs now, std::uint32_t wire_bytes);
  // Reverse-direction ACK traversal: delay and serialization, no loss or capacity.
  TimeNs ackTransit(std::uint32_t wire_bytes) const;

  void markDelivered(std::uint32_t wire_bytes) { delivered_bytes_ += wire_bytes; }

  std::size_t queueLength(TimeNs now);
  TimeNs busyUntil() const { return busy_until_; }
  std::uint64_t drops() const { return drops_full_ + drops_loss_; }
  std::uint64_t dropsFull() const { return drops_full_; }
  std::uint64_t dropsLoss() const { return drops_loss_; }
  std::uint64_t acceptedBytes() const { return accepted_bytes_; }
  std::uint64_t deliveredBytes() const { return delivered_bytes_; }

 private:
  std::string name_;
  PathConfig cfg_;
  std::optional<RngStream> loss_rng_;
  std::deque<TimeNs> departures_;
  TimeNs busy_until_ = 0;
  std::uint64_t drops_full_ = 0;
  std::uint64_t drops_loss_ = 0;
  std::uint64_t accepted_bytes_ = 0;
  std::uint64_t delivered_bytes_ = 0;
};

enum class Direction { Forward, Reverse };
enum class LinkId : std::uint8_t { L1 = 0, L2 = 1, L3 = 2 };

const char* linkName(LinkId id);

// Host A -(L1, L2)- router -(L3)- host B. Subflow ids are 1-based.
std::array<LinkId, 2> route(Direction dir, int subflow_id);

class Topology {
 public:
  Topology(const PathConfig& l1, const PathConfig& l2, const PathConfig& l3, std::uint64_t seed);

  Link& link(LinkId id) { return links_[static_cast<int>(id)]; }
  const Link& link(LinkId id) const { return links_[static_cast<int>(id)]; }
  // Total reverse-path latency of one ACK for the subflow.
  TimeNs ackLatency(int subflow_id) const;

 private:
  std::array<Link, 3> links_;
};

}  // namespace mpsim
