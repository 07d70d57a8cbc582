#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "mpsim/path.hpp"
#include "mpsim/time.hpp"

namespace mpsim {

class CongestionController;

constexpr double kInfiniteSsthresh = std::numeric_limits<double>::max() / 4;
constexpr TimeNs kRtoFloor = 200 * kNsPerMs;
constexpr TimeNs kRtoCeiling = 60 * kNsPerSec;
constexpr TimeNs kInitialRto = kNsPerSec;

struct SubflowState {
  int id = 1;
  std::uint64_t snd_una = 0;
  std::uint64_t snd_nxt = 0;
  double cwnd = 0;
  double ssthresh = kInfiniteSsthresh;
  std::uint64_t flight_size = 0;
  // Transmitted, unacknowledged and not marked lost.
  std::uint64_t pipe = 0;
  // Bytes duplicate ACKs report as received past the first hole.
  std::uint64_t sacked_out = 0;
  // When set, sacked_out leaves the pipe instead of inflating cwnd.
  bool dupacks_leave_pipe = false;
  TimeNs srtt = 0;
  TimeNs rttvar = 0;
  TimeNs rto = kInitialRto;
  TimeNs min_rtt = 0;
  bool has_rtt = false;
  int dup_ack_count = 0;
  bool in_fast_recovery = false;
  std::uint64_t recover = 0;
  double smss = kPayloadMss;
  std::uint64_t retransmit_count = 0;
  std::uint64_t retransmitted_bytes = 0;
  // Retransmissions of records already removed from the ledger.
  std::uint64_t retired_rtx = 0;
  bool backup = false;
  bool closed = false;

  // Delivery-rate estimation.
  std::uint64_t delivered = 0;
  TimeNs delivered_time = 0;
  TimeNs first_sent_time = 0;
  std::uint64_t app_limited = 0;
  std::uint64_t lost_total = 0;

  std::uint64_t stale_acks = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
};

struct SegmentRecord {
  std::uint64_t subflow_seq = 0;
  std::uint64_t dsn = 0;
  std::uint32_t len = 0;
  TimeNs sent_at = 0;
  bool retransmitted = false;
  bool lost = false;
  bool rto_resent = false;
  std::uint32_t rtx_count = 0;
  std::uint64_t checksum = 0;
  std::uint64_t delivered = 0;
  TimeNs delivered_time = 0;
  TimeNs first_sent_time = 0;
  bool app_limited = false;
};

struct RateSample {
  bool valid = false;
  double delivery_rate = 0;  // payload bytes per second
  bool is_app_limited = false;
  std::uint64_t prior_delivered = 0;
  std::uint64_t delivered = 0;
  TimeNs interval = 0;
};

enum class AckKind { Advance, PartialAdvance, RecoveryExit, DupAck, DupAckInRecovery, EnterRecovery, Stale };

struct AckInfo {
  AckKind kind = AckKind::Advance;
  TimeNs now = 0;
  std::uint64_t newly_acked = 0;
  // Growth of SubflowState::delivered on this ACK.
  std::uint64_t delivered_bytes = 0;
  std::uint32_t acked_segments = 0;
  std::uint64_t prior_inflight = 0;
  std::uint64_t lost_bytes = 0;
  TimeNs rtt = -1;
  RateSample rs;
};

struct OutSegment {
  std::uint64_t subflow_seq = 0;
  std::uint64_t dsn = 0;
  std::uint32_t len = 0;
  std::uint64_t checksum = 0;
  bool retransmission = false;
};

struct DsnRange {
  std::uint64_t dsn = 0;
  std::uint32_t len = 0;
  std::uint64_t checksum = 0;
};

void updateRttEstimator(SubflowState& st, TimeNs sample);

inline std::uint64_t inFlight(const SubflowState& s) {
  return s.dupacks_leave_pipe ? s.pipe - std::min(s.sacked_out, s.pipe) : s.pipe;
}

class Subflow {
 public:
  Subflow(int id, double smss, bool limited_transmit = false);

  SubflowState& state() { return st_; }
  const SubflowState& state() const { return st_; }
  const std::deque<SegmentRecord>& ledger() const { return ledger_; }

  void queueData(const DsnRange& range) { txq_.push_back(range); queued_bytes_ += range.len; }
  std::uint64_t queuedBytes() const { return queued_bytes_; }
  std::uint64_t pendingRetransmitBytes() const { return lost_pending_bytes_; }
  bool hasPendingTransmission() const { return fast_rtx_pending_ || lost_pending_bytes_ > 0 || !txq_.empty(); }
  // Window space not yet claimed by queued or pending segments.
  double sendAllowance() const;
  bool available() const { return !st_.closed && sendAllowance() >= st_.smss; }

  // Next segment the window permits, or nothing.
  std::optional<OutSegment> nextTransmission(TimeNs now);
  void markAppLimited();

  AckInfo onAck(TimeNs now, std::uint64_t ack_seq, CongestionController& cc, int index);
  // Returns the head range for the meta retransmission queue.
  std::optional<DsnRange> onRto(TimeNs now, CongestionController& cc, int index);

  bool timerArmed() const { return rto_deadline_.has_value(); }
  TimeNs rtoDeadline() const { return rto_deadline_.value_or(0); }

  std::uint64_t lostPendingBytes() const { return lost_pending_bytes_; }
  const std::deque<DsnRange>& sendQueue() const { return txq_; }
  // First unacknowledged record carrying the given DSN, if any.
  const SegmentRecord* findDsn(std::uint64_t dsn) const;

 private:
  void stampTransmit(SegmentRecord& rec, TimeNs now);
  std::optional<std::size_t> nextLostIndex();

  SubflowState st_;
  bool limited_transmit_;
  std::deque<SegmentRecord> ledger_;
  std::deque<DsnRange> txq_;
  std::uint64_t queued_bytes_ = 0;
  std::uint64_t lost_pending_bytes_ = 0;
  std::uint64_t lost_cursor_ = 0;
  bool fast_rtx_pending_ = false;
  std::uint32_t partial_acks_ = 0;
  bool rto_recovery_ = false;
  std::uint64_t rto_recover_ = 0;
  std::optional<TimeNs> rto_deadline_;
};

struct ReceivedSegment {
  std::uint64_t dsn = 0;
  std::uint32_t len = 0;
  std::uint64_t checksum = 0;
};

class SubflowReceiver {
 public:
  // Appends segments that became in-order at subflow level to `ready`.
  void onSegment(std::uint64_t seq, const ReceivedSegment& seg, std::vector<ReceivedSegment>& ready);
  std::uint64_t rcvNxt() const { return rcv_nxt_; }
  std::uint64_t bufferedBytes() const { return buffered_bytes_; }
  const std::map<std::uint64_t, ReceivedSegment>& held() const { return ofo_; }

 private:
  std::uint64_t rcv_nxt_ = 0;
  std::map<std::uint64_t, ReceivedSegment> ofo_;
  std::uint64_t buffered_bytes_ = 0;
};

}  // namespace mpsim
