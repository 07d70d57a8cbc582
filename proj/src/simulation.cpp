#include "mpsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

#include "mpsim/error.hpp"
#include "mpsim/event_queue.hpp"
#include "mpsim/metrics.hpp"

namespace mpsim {

PathConfig defaultBottleneck() { return makePath(2000, 0, 0); }

namespace {

enum Stage : std::uint32_t { DataAtRouter = 0, DataAtHost = 1, AckAtSender = 2 };
enum Timer : std::uint32_t { RtoTimer = 0, PacingTimer = 1 };

constexpr std::uint32_t encode(std::uint32_t stage, int r) { return (stage << 8) | static_cast<std::uint32_t>(r); }

struct Packet {
  int sf = 0;
  std::uint64_t seq = 0;
  ReceivedSegment seg;
  std::uint32_t wire = 0;
  std::uint64_t ack_seq = 0;
  std::uint64_t data_ack = 0;
  std::uint64_t rwnd = 0;
};

class Connection {
 public:
  explicit Connection(const RunConfig& cfg);
  RunResult run();

 private:
  static constexpr int kSubflows = 2;

  std::uint32_t allocPacket();
  void freePacket(std::uint32_t id) { free_.push_back(id); }

  void dispatch(const SimEvent& ev);
  void onDataAtRouter(std::uint32_t id);
  void onDataAtHost(std::uint32_t id);
  void onAckAtSender(std::uint32_t id);
  void onRtoTimer(int r, std::uint64_t gen);
  void onPacingTimer(int r);
  void onSample();

  void pump();
  void transmit(int r);
  void armRto(int r);
  void handleWindowBlocked();
  SchedView buildView() const;
  void checkInvariants();
  void trace(const char* kind, int r, std::uint64_t a, std::uint64_t b);

  const RunConfig& cfg_;
  EventQueue q_;
  Topology topo_;
  MetaSender ms_;
  MetaReceiver mr_;
  std::vector<Subflow> subs_;
  std::array<SubflowReceiver, kSubflows> rcv_;
  std::unique_ptr<CongestionController> cc_;
  std::unique_ptr<Scheduler> sched_;
  bool paced_ = false;

  std::vector<Packet> pool_;
  std::vector<std::uint32_t> free_;

  std::array<TimeNs, kSubflows> next_send_at_{};
  std::array<bool, kSubflows> pacing_pending_{};
  std::array<std::uint64_t, kSubflows> rto_gen_{};
  std::array<bool, kSubflows> rto_pending_{};
  std::array<TimeNs, kSubflows> rto_event_at_{};
  std::array<TimeNs, kSubflows> last_penalty_{};
  std::uint64_t last_reinjected_ = UINT64_MAX;
  std::uint64_t last_blocked_ack_ = UINT64_MAX;

  // Delivered-byte history per subflow for the goodput estimate.
  std::array<std::vector<std::uint64_t>, kSubflows> gp_ring_;
  std::size_t gp_pos_ = 0;
  std::uint64_t ticks_ = 0;
  std::array<double, kSubflows> goodput_{};

  std::array<double, kSubflows> srtt_sum_{};
  std::array<std::uint64_t, kSubflows> srtt_n_{};
  double ofo_bytes_sum_ = 0;
  double ofo_segs_sum_ = 0;

  std::vector<ReceivedSegment> ready_;
  RunResult res_;
  bool done_ = false;
};

Connection::Connection(const RunConfig& cfg)
    : cfg_(cfg),
      topo_(cfg.sf1, cfg.sf2, cfg.l3, cfg.seed),
      ms_(bufferCapacity({cfg.sf1.rate_bps, cfg.sf2.rate_bps},
                         2 * std::max(cfg.sf1.one_way_delay, cfg.sf2.one_way_delay)),
          cfg.source_bytes),
      mr_(ms_.bufCap(), kSubflows) {
  for (int i = 0; i < kSubflows; ++i) subs_.emplace_back(i + 1, kPayloadMss, cfg.limited_transmit);
  cc_ = makeController(cfg.cca, CcOptions{mixSeed(cfg.seed, stableHash("cc"))});
  sched_ = makeScheduler(cfg.scheduler, cfg.sched_opts);
  cc_->bind({&subs_[0].state(), &subs_[1].state()}, 0);
  paced_ = cc_->paced();
  const std::size_t window = static_cast<std::size_t>(kNsPerSec / kSampleInterval) + 1;
  for (auto& ring : gp_ring_) ring.assign(window, 0);
  pool_.reserve(4096);
}

std::uint32_t Connection::allocPacket() {
  if (!free_.empty()) {
    const std::uint32_t id = free_.back();
    free_.pop_back();
    return id;
  }
  pool_.emplace_back();
  return static_cast<std::uint32_t>(pool_.size() - 1);
}

void Connection::trace(const char* kind, int r, std::uint64_t a, std::uint64_t b) {
  if (!cfg_.record_trace) return;
  res_.trace += std::to_string(q_.now());
  res_.trace += ' ';
  res_.trace += kind;
  res_.trace += ' ';
  res_.trace += std::to_string(r + 1);
  res_.trace += ' ';
  res_.trace += std::to_string(a);
  res_.trace += ' ';
  res_.trace += std::to_string(b);
  res_.trace += '\n';
}

SchedView Connection::buildView() const {
  SchedView v;
  v.n = kSubflows;
  for (int i = 0; i < kSubflows; ++i) {
    const Subflow& sf = subs_[i];
    const SubflowState& s = sf.state();
    SubflowView& o = v.sf[i];
    o.id = s.id;
    o.srtt = toSeconds(s.srtt);
    o.rttvar = toSeconds(s.rttvar);
    o.cwnd = s.cwnd;
    o.inflight = s.cwnd - sf.sendAllowance();
    o.smss = s.smss;
    o.available = sf.available();
    o.backup = s.backup;
    o.open = !s.closed;
    o.goodput = goodput_[i];
  }
  v.send_window = static_cast<double>(ms_.sendWindow());
  v.remaining = static_cast<double>(ms_.remainingBytes());
  return v;
}

void Connection::armRto(int r) {
  const Subflow& sf = subs_[r];
  if (!sf.timerArmed()) return;
  const TimeNs deadline = sf.rtoDeadline();
  if (rto_pending_[r] && rto_event_at_[r] <= deadline) return;
  rto_pending_[r] = true;
  rto_event_at_[r] = deadline;
  q_.schedule(deadline, EventKind::TimerExpiry, encode(RtoTimer, r), ++rto_gen_[r]);
}

void Connection::transmit(int r) {
  Subflow& sf = subs_[r];
  const TimeNs now = q_.now();
  const LinkId link = r == 0 ? LinkId::L1 : LinkId::L2;
  while (sf.hasPendingTransmission()) {
    if (paced_ && now < next_send_at_[r]) {
      if (!pacing_pending_[r]) {
        pacing_pending_[r] = true;
        q_.schedule(next_send_at_[r], EventKind::TimerExpiry, encode(PacingTimer, r));
      }
      return;
    }
    if (paced_) cc_->onTransmit(r, now);
    if (cc_->rateCapped(r)) sf.markAppLimited();
    const std::optional<OutSegment> seg = sf.nextTransmission(now);
    if (!seg) return;
    const std::uint32_t wire = seg->len + kAckWireBytes;
    const EnqueueResult er = topo_.link(link).enqueue(now, wire);
    trace(seg->retransmission ? "rtx" : "send", r, seg->dsn, seg->subflow_seq);
    if (er.accepted()) {
      const std::uint32_t id = allocPacket();
      Packet& p = pool_[id];
      p.sf = r;
      p.seq = seg->subflow_seq;
      p.seg = ReceivedSegment{seg->dsn, seg->len, seg->checksum};
      p.wire = wire;
      q_.schedule(er.delivery_at, EventKind::PacketArrival, encode(DataAtRouter, r), id);
    } else {
      trace("drop", r, seg->dsn, static_cast<std::uint64_t>(er.outcome));
    }
    armRto(r);
    if (paced_) {
      const double rate = cc_->pacingRate(r);
      if (rate > 0) next_send_at_[r] = std::max(now, next_send_at_[r]) + fromSeconds(seg->len / rate);
    }
  }
}

void Connection::handleWindowBlocked() {
  int avail = -1;
  for (int i = 0; i < kSubflows; ++i) {
    if (subs_[i].available()) {
      avail = i;
      break;
    }
  }
  if (avail < 0) return;
  const std::uint64_t hol = ms_.dataAcked();
  if (hol != last_blocked_ack_) {
    last_blocked_ack_ = hol;
    sched_->onWindowBlocked(q_.now());
  }
  if (!sched_->opportunisticRetransmit() || hol == last_reinjected_) return;
  const SchedView v = buildView();
  const int target = sched::minRtt(v);
  if (target < 0) return;
  for (int c = 0; c < kSubflows; ++c) {
    if (c == target) continue;
    const SegmentRecord* rec = subs_[c].findDsn(hol);
    if (!rec) continue;
    last_reinjected_ = hol;
    subs_[target].queueData(DsnRange{rec->dsn, rec->len, rec->checksum});
    trace("reinject", target, rec->dsn, static_cast<std::uint64_t>(c + 1));
    SubflowState& cs = subs_[c].state();
    const TimeNs now = q_.now();
    if (now - last_penalty_[c] >= cs.srtt) {
      last_penalty_[c] = now;
      cs.cwnd = std::max(cs.cwnd / 2, cs.smss);
      if (cs.ssthresh < kInfiniteSsthresh) cs.ssthresh = std::max(cs.ssthresh / 2, 2 * cs.smss);
      trace("penalize", c, static_cast<std::uint64_t>(cs.cwnd), 0);
    }
    transmit(target);
    return;
  }
}

void Connection::pump() {
  for (int r = 0; r < kSubflows; ++r) transmit(r);
  for (int guard = 0; guard < 1 << 20; ++guard) {
    if (!ms_.hasPayload()) {
      if (ms_.windowBlocked()) handleWindowBlocked();
      return;
    }
    const SchedView v = buildView();
    const SchedDecision d = sched_->pick(v);
    if (d.none()) return;
    const bool fresh = ms_.rtxQueueSize() == 0;
    const DsnRange range = ms_.nextPayload(static_cast<std::uint32_t>(subs_[d.target].state().smss));
    if (fresh && range.dsn + range.len > ms_.dataAcked() + ms_.rwnd()) ++res_.window_overruns;
    subs_[d.target].queueData(range);
    if (d.duplicate_on >= 0) subs_[d.duplicate_on].queueData(range);
    transmit(d.target);
    if (d.duplicate_on >= 0) transmit(d.duplicate_on);
  }
}

void Connection::onDataAtRouter(std::uint32_t id) {
  Packet& p = pool_[id];
  const EnqueueResult er = topo_.link(LinkId::L3).enqueue(q_.now(), p.wire);
  if (!er.accepted()) {
    trace("drop", p.sf, p.seg.dsn, 3);
    freePacket(id);
    return;
  }
  q_.schedule(er.delivery_at, EventKind::PacketArrival, encode(DataAtHost, p.sf), id);
}

void Connection::onDataAtHost(std::uint32_t id) {
  Packet& p = pool_[id];
  const int r = p.sf;
  ready_.clear();
  rcv_[r].onSegment(p.seq, p.seg, ready_);
  for (const ReceivedSegment& seg : ready_) mr_.onSegment(seg, r);
  const std::uint64_t held = rcv_[0].bufferedBytes() + rcv_[1].bufferedBytes();
  res_.max_receive_memory = std::max(res_.max_receive_memory, held + mr_.ofoBytes());
  p.ack_seq = rcv_[r].rcvNxt();
  p.data_ack = mr_.dataAck();
  p.rwnd = mr_.advertise(held);
  q_.schedule(q_.now() + topo_.ackLatency(r + 1), EventKind::PacketArrival, encode(AckAtSender, r), id);
  if (cfg_.source_bytes != UINT64_MAX && mr_.deliveredBytes() >= cfg_.source_bytes) done_ = true;
}

void Connection::onAckAtSender(std::uint32_t id) {
  const Packet p = pool_[id];
  freePacket(id);
  const int r = p.sf;
  ms_.onDataAck(p.data_ack, p.rwnd);
  const AckInfo info = subs_[r].onAck(q_.now(), p.ack_seq, *cc_, r);
  if (info.kind == AckKind::EnterRecovery) trace("fastrtx", r, p.ack_seq, 0);
  armRto(r);
  pump();
}

void Connection::onRtoTimer(int r, std::uint64_t gen) {
  if (gen != rto_gen_[r]) return;
  rto_pending_[r] = false;
  Subflow& sf = subs_[r];
  if (!sf.timerArmed()) return;
  if (sf.rtoDeadline() > q_.now()) {
    armRto(r);
    return;
  }
  const std::optional<DsnRange> range = sf.onRto(q_.now(), *cc_, r);
  trace("rto", r, range ? range->dsn : 0, sf.state().timeouts);
  if (range) ms_.onSubflowTimeout(*range);
  armRto(r);
  pump();
}

void Connection::onPacingTimer(int r) {
  pacing_pending_[r] = false;
  pump();
}

void Connection::checkInvariants() {
  const std::uint64_t lo = mr_.dataAck();
  const std::uint64_t hi = ms_.dsnNext();
  if (hi <= lo) return;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> iv;
  auto add = [&](std::uint64_t dsn, std::uint32_t len) { iv.emplace_back(dsn, dsn + len); };
  mr_.forEachHeld([&](const ReceivedSegment& s) { add(s.dsn, s.len); });
  for (int i = 0; i < kSubflows; ++i) {
    for (const auto& [seq, s] : rcv_[i].held()) add(s.dsn, s.len);
    for (const SegmentRecord& rec : subs_[i].ledger()) add(rec.dsn, rec.len);
    for (const DsnRange& d : subs_[i].sendQueue()) add(d.dsn, d.len);
  }
  for (const auto& [dsn, d] : ms_.rtxQueue()) add(d.dsn, d.len);
  std::sort(iv.begin(), iv.end());
  std::uint64_t covered = lo;
  for (const auto& [a, b] : iv) {
    if (b <= covered) continue;
    if (a > covered) break;
    covered = b;
  }
  if (covered < hi) ++res_.invariant_violations;
  if (res_.max_receive_memory > mr_.bufCap()) ++res_.invariant_violations;
}

void Connection::onSample() {
  const TimeNs now = q_.now();
  ++ticks_;
  const std::size_t window = gp_ring_[0].size();
  const std::size_t oldest = (gp_pos_ + 1) % window;
  const double span = toSeconds(std::min<TimeNs>(now, static_cast<TimeNs>(window - 1) * kSampleInterval));
  TimeNs fast_srtt = 0;
  for (int i = 0; i < kSubflows; ++i) {
    const SubflowState& s = subs_[i].state();
    gp_ring_[i][gp_pos_] = s.delivered;
    const std::uint64_t past = ticks_ >= window ? gp_ring_[i][oldest] : 0;
    goodput_[i] = span > 0 ? static_cast<double>(s.delivered - past) / span : 0;
    if (s.has_rtt) {
      srtt_sum_[i] += static_cast<double>(s.srtt);
      ++srtt_n_[i];
      if (cfg_.record_series) res_.sf[i].srtt_series.emplace_back(now, s.srtt);
      if (!s.closed && (fast_srtt == 0 || s.srtt < fast_srtt)) fast_srtt = s.srtt;
    }
  }
  gp_pos_ = oldest;
  sched_->onTick(now, fast_srtt);

  const std::uint64_t ob = mr_.ofoBytes();
  const std::uint64_t os = mr_.ofoSegments();
  ++res_.ofo.samples;
  ofo_bytes_sum_ += static_cast<double>(ob);
  ofo_segs_sum_ += static_cast<double>(os);
  res_.ofo.max_bytes = std::max(res_.ofo.max_bytes, ob);
  res_.ofo.max_segments = std::max<std::uint64_t>(res_.ofo.max_segments, os);
  if (cfg_.record_series) res_.ofo_series.push_back({now, ob, os});
  if (cfg_.check_invariants) checkInvariants();
  if (now + kSampleInterval <= cfg_.duration) q_.schedule(now + kSampleInterval, EventKind::SampleTick);
}

void Connection::dispatch(const SimEvent& ev) {
  switch (ev.kind) {
    case EventKind::PacketArrival: {
      const auto id = static_cast<std::uint32_t>(ev.payload);
      switch (ev.target >> 8) {
        case DataAtRouter: onDataAtRouter(id); break;
        case DataAtHost: onDataAtHost(id); break;
        case AckAtSender: onAckAtSender(id); break;
      }
      break;
    }
    case EventKind::TimerExpiry: {
      const int r = static_cast<int>(ev.target & 0xff);
      if ((ev.target >> 8) == RtoTimer)
        onRtoTimer(r, ev.payload);
      else
        onPacingTimer(r);
      break;
    }
    case EventKind::AppWrite:
      pump();
      break;
    case EventKind::SampleTick:
      onSample();
      break;
  }
}

RunResult Connection::run() {
  q_.schedule(0, EventKind::AppWrite);
  q_.schedule(kSampleInterval, EventKind::SampleTick);
  auto handler = [this](const SimEvent& ev) { dispatch(ev); };
  if (cfg_.source_bytes == UINT64_MAX) {
    q_.runUntil(cfg_.duration, handler);
  } else {
    const TimeNs step = 10 * kNsPerMs;
    for (TimeNs t = step; !done_; t += step) {
      q_.runUntil(std::min(t, cfg_.duration), handler);
      if (t >= cfg_.duration) break;
    }
  }
  res_.finished_at = q_.now();

  const double dur = toSeconds(cfg_.duration);
  for (int i = 0; i < kSubflows; ++i) {
    const SubflowState& s = subs_[i].state();
    SubflowResult& o = res_.sf[i];
    o.delivered_bytes = mr_.deliveredBy(i);
    o.goodput_mbps = goodputMbps(static_cast<double>(o.delivered_bytes), dur);
    o.retransmissions = s.retransmit_count;
    std::uint64_t live = 0;
    for (const SegmentRecord& rec : subs_[i].ledger()) live += rec.rtx_count;
    o.ledger_retransmissions = s.retired_rtx + live;
    o.timeouts = s.timeouts;
    o.fast_retransmits = s.fast_retransmits;
    o.link_drops = topo_.link(i == 0 ? LinkId::L1 : LinkId::L2).drops();
    o.mean_srtt_ms = srtt_n_[i] ? srtt_sum_[i] / static_cast<double>(srtt_n_[i]) / 1e6 : 0;
    o.final_cwnd = s.cwnd;
    o.closed = s.closed;
  }
  res_.delivered_bytes = mr_.deliveredBytes();
  res_.agg_goodput_mbps = goodputMbps(static_cast<double>(res_.delivered_bytes), dur);
  res_.avg_ppd_ms = res_.delivered_bytes > 0 ? perPacketDelayMs(static_cast<double>(res_.delivered_bytes), kWireMss, dur) : 0;
  if (res_.ofo.samples > 0) {
    res_.ofo.mean_bytes = ofo_bytes_sum_ / static_cast<double>(res_.ofo.samples);
    res_.ofo.mean_segments = ofo_segs_sum_ / static_cast<double>(res_.ofo.samples);
  }
  res_.events = q_.dispatched();
  res_.trace_hash = q_.traceHash();
  res_.duplicate_bytes = mr_.duplicateBytes();
  res_.checksum_errors = mr_.checksumErrors();
  res_.sink_digest = mr_.sinkDigest();
  res_.source_digest = ms_.sourceDigest();
  return std::move(res_);
}

}  // namespace

RunResult simulate(const RunConfig& cfg) {
  validate(cfg.sf1);
  validate(cfg.sf2);
  validate(cfg.l3);
  if (cfg.duration <= 0) throw RangeError("duration must be positive");
  Connection conn(cfg);
  return conn.run();
}

}  // namespace mpsim
