#include "mpsim/path.hpp"

#include <algorithm>
#include <cmath>

#include "mpsim/error.hpp"

namespace mpsim {

PathConfig makePath(double rate_mbps, double rtt_ms, double loss_pct) {
  if (!(rate_mbps > 0)) throw RangeError("rate must be positive");
  if (!(rtt_ms >= 0)) throw RangeError("rtt must be non-negative");
  if (!(loss_pct >= 0 && loss_pct <= 100)) throw RangeError("loss must be within [0,100] percent");
  PathConfig cfg;
  cfg.rate_bps = rate_mbps * 1e6;
  const TimeNs one_way = fromSeconds(rtt_ms / 1e3 / 2.0);
  cfg.one_way_delay = one_way > 0 ? one_way : kNsPerUs;
  cfg.loss_rate = loss_pct / 100.0;
  const double bdp_frames = cfg.rate_bps * (rtt_ms / 1e3) / 8.0 / kWireMss;
  cfg.queue_cap = std::max<std::uint32_t>(kMinQueueCap, static_cast<std::uint32_t>(std::ceil(bdp_frames)));
  return cfg;
}

void validate(const PathConfig& cfg) {
  if (!(cfg.rate_bps > 0)) throw RangeError("rate must be positive");
  if (cfg.one_way_delay < 0) throw RangeError("delay must be non-negative");
  if (!(cfg.loss_rate >= 0 && cfg.loss_rate <= 1)) throw RangeError("loss rate outside [0,1]");
  if (cfg.queue_cap < 1) throw RangeError("queue capacity must be at least 1");
}

TimeNs serializationTime(double rate_bps, std::uint32_t bytes) {
  return static_cast<TimeNs>(std::llround(static_cast<double>(bytes) * 8.0 * 1e9 / rate_bps));
}

Link::Link(std::string name, const PathConfig& cfg, std::uint64_t seed) : name_(std::move(name)), cfg_(cfg) {
  validate(cfg_);
  if (cfg_.loss_rate > 0) loss_rng_.emplace(seed, name_);
}

std::size_t Link::queueLength(TimeNs now) {
  while (!departures_.empty() && departures_.front() <= now) departures_.pop_front();
  return departures_.size();
}

EnqueueResult Link::enqueue(TimeNs now, std::uint32_t wire_bytes) {
  EnqueueResult r;
  if (queueLength(now) >= cfg_.queue_cap) {
    ++drops_full_;
    r.outcome = EnqueueOutcome::DroppedFull;
    return r;
  }
  if (loss_rng_ && loss_rng_->bernoulli(cfg_.loss_rate)) {
    ++drops_loss_;
    r.outcome = EnqueueOutcome::DroppedLoss;
    return r;
  }
  const TimeNs start = std::max(now, busy_until_);
  busy_until_ = start + serializationTime(cfg_.rate_bps, wire_bytes);
  departures_.push_back(busy_until_);
  accepted_bytes_ += wire_bytes;
  r.delivery_at = busy_until_ + cfg_.one_way_delay;
  return r;
}

TimeNs Link::ackTransit(std::uint32_t wire_bytes) const {
  return serializationTime(cfg_.rate_bps, wire_bytes) + cfg_.one_way_delay;
}

const char* linkName(LinkId id) {
  switch (id) {
    case LinkId::L1: return "L1";
    case LinkId::L2: return "L2";
    case LinkId::L3: return "L3";
  }
  return "?";
}

std::array<LinkId, 2> route(Direction dir, int subflow_id) {
  LinkId access;
  if (subflow_id == 1) {
    access = LinkId::L1;
  } else if (subflow_id == 2) {
    access = LinkId::L2;
  } else {
    throw UnknownSubflow("no route for subflow " + std::to_string(subflow_id));
  }
  if (dir == Direction::Forward) return {access, LinkId::L3};
  return {LinkId::L3, access};
}

Topology::Topology(const PathConfig& l1, const PathConfig& l2, const PathConfig& l3, std::uint64_t seed)
    : links_{Link("L1", l1, seed), Link("L2", l2, seed), Link("L3", l3, seed)} {}

TimeNs Topology::ackLatency(int subflow_id) const {
  TimeNs total = 0;
  for (LinkId id : route(Direction::Reverse, subflow_id)) total += link(id).ackTransit(kAckWireBytes);
  return total;
}

}  // namespace mpsim
