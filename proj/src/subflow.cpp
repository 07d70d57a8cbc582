#include "mpsim/subflow.hpp"

#include <algorithm>
#include <cstdlib>

#include "mpsim/congestion.hpp"
#include "mpsim/error.hpp"
#include "mpsim/reno.hpp"

namespace mpsim {

void updateRttEstimator(SubflowState& st, TimeNs sample) {
  if (!st.has_rtt) {
    st.srtt = sample;
    st.rttvar = sample / 2;
    st.has_rtt = true;
    st.min_rtt = sample;
  } else {
    const TimeNs err = sample - st.srtt;
    st.srtt += err / 8;
    st.rttvar += (std::llabs(err) - st.rttvar) / 4;
    st.min_rtt = std::min(st.min_rtt, sample);
  }
  st.rto = std::clamp<TimeNs>(st.srtt + 4 * st.rttvar, kRtoFloor, kRtoCeiling);
}

Subflow::Subflow(int id, double smss, bool limited_transmit) : limited_transmit_(limited_transmit) {
  st_.id = id;
  st_.smss = smss;
  st_.cwnd = reno::initialWindow(smss);
}

double Subflow::sendAllowance() const {
  double window = st_.cwnd;
  if (limited_transmit_ && !st_.in_fast_recovery && st_.dup_ack_count > 0 && st_.dup_ack_count < 3) {
    window += st_.dup_ack_count * st_.smss;
  }
  return window - static_cast<double>(inFlight(st_) + queued_bytes_ + lost_pending_bytes_);
}

void Subflow::markAppLimited() {
  const std::uint64_t mark = st_.delivered + inFlight(st_);
  st_.app_limited = mark > 0 ? mark : 1;
}

void Subflow::stampTransmit(SegmentRecord& rec, TimeNs now) {
  if (st_.flight_size == 0) {
    st_.first_sent_time = now;
    st_.delivered_time = now;
  }
  rec.sent_at = now;
  rec.delivered = st_.delivered;
  rec.delivered_time = st_.delivered_time;
  rec.first_sent_time = st_.first_sent_time;
  rec.app_limited = st_.app_limited != 0;
}

std::optional<std::size_t> Subflow::nextLostIndex() {
  if (lost_pending_bytes_ == 0 || ledger_.empty()) return std::nullopt;
  const std::uint64_t base = ledger_.front().subflow_seq;
  std::size_t i = 0;
  if (lost_cursor_ > base) {
    auto it = std::lower_bound(ledger_.begin(), ledger_.end(), lost_cursor_,
                               [](const SegmentRecord& r, std::uint64_t s) { return r.subflow_seq < s; });
    i = static_cast<std::size_t>(it - ledger_.begin());
  }
  for (; i < ledger_.size(); ++i) {
    if (ledger_[i].lost) {
      lost_cursor_ = ledger_[i].subflow_seq;
      return i;
    }
  }
  return std::nullopt;
}

std::optional<OutSegment> Subflow::nextTransmission(TimeNs now) {
  auto retransmit = [&](SegmentRecord& rec) {
    if (rec.lost) {
      rec.lost = false;
      lost_pending_bytes_ -= rec.len;
      st_.pipe += rec.len;
    }
    stampTransmit(rec, now);
    rec.retransmitted = true;
    ++rec.rtx_count;
    ++st_.retransmit_count;
    st_.retransmitted_bytes += rec.len;
    return OutSegment{rec.subflow_seq, rec.dsn, rec.len, rec.checksum, true};
  };

  if (fast_rtx_pending_) {
    fast_rtx_pending_ = false;
    if (!ledger_.empty()) return retransmit(ledger_.front());
  }
  double window = st_.cwnd;
  if (limited_transmit_ && !st_.in_fast_recovery && st_.dup_ack_count > 0 && st_.dup_ack_count < 3) {
    window += st_.dup_ack_count * st_.smss;
  }
  if (auto idx = nextLostIndex()) {
    SegmentRecord& rec = ledger_[*idx];
    if (inFlight(st_) == 0 || static_cast<double>(inFlight(st_) + rec.len) <= window) return retransmit(rec);
    return std::nullopt;
  }
  if (txq_.empty()) return std::nullopt;
  const DsnRange& next = txq_.front();
  if (inFlight(st_) > 0 && static_cast<double>(inFlight(st_) + next.len) > window) return std::nullopt;

  SegmentRecord rec;
  rec.subflow_seq = st_.snd_nxt;
  rec.dsn = next.dsn;
  rec.len = next.len;
  rec.checksum = next.checksum;
  stampTransmit(rec, now);
  st_.snd_nxt += rec.len;
  st_.flight_size = st_.snd_nxt - st_.snd_una;
  st_.pipe += rec.len;
  queued_bytes_ -= rec.len;
  txq_.pop_front();
  ledger_.push_back(rec);
  if (!rto_deadline_) rto_deadline_ = now + st_.rto;
  return OutSegment{rec.subflow_seq, rec.dsn, rec.len, rec.checksum, false};
}

const SegmentRecord* Subflow::findDsn(std::uint64_t dsn) const {
  for (const SegmentRecord& rec : ledger_) {
    if (rec.dsn == dsn) return &rec;
  }
  return nullptr;
}

AckInfo Subflow::onAck(TimeNs now, std::uint64_t ack_seq, CongestionController& cc, int index) {
  AckInfo info;
  info.now = now;
  info.prior_inflight = inFlight(st_);
  if (ack_seq < st_.snd_una) {
    ++st_.stale_acks;
    info.kind = AckKind::Stale;
    return info;
  }
  if (ack_seq > st_.snd_nxt) throw WindowOverflow("ACK beyond snd_nxt");

  if (ack_seq == st_.snd_una) {
    if (st_.flight_size == 0) {
      info.kind = AckKind::Stale;
      return info;
    }
    ++st_.dup_ack_count;
    const auto seg = static_cast<std::uint64_t>(st_.smss);
    if (st_.flight_size > seg && st_.sacked_out + seg <= st_.flight_size - seg) {
      st_.sacked_out += seg;
      st_.delivered += seg;
      info.delivered_bytes = seg;
    }
    if (st_.in_fast_recovery) {
      info.kind = AckKind::DupAckInRecovery;
    } else if (st_.dup_ack_count == 3 && !rto_recovery_) {
      info.kind = AckKind::EnterRecovery;
      st_.in_fast_recovery = true;
      st_.recover = st_.snd_nxt;
      partial_acks_ = 0;
      ++st_.fast_retransmits;
      if (!ledger_.empty()) info.lost_bytes = ledger_.front().len;
      st_.lost_total += info.lost_bytes;
      fast_rtx_pending_ = true;
    } else {
      info.kind = AckKind::DupAck;
    }
    cc.onAck(index, info);
    return info;
  }

  info.newly_acked = ack_seq - st_.snd_una;
  bool karn_clean = true;
  std::uint64_t hole = 0;
  const SegmentRecord* newest = nullptr;
  SegmentRecord newest_copy;
  while (!ledger_.empty() && ledger_.front().subflow_seq + ledger_.front().len <= ack_seq) {
    SegmentRecord& rec = ledger_.front();
    if (rec.lost) {
      lost_pending_bytes_ -= rec.len;
    } else {
      st_.pipe -= rec.len;
    }
    if (rec.retransmitted) karn_clean = false;
    st_.retired_rtx += rec.rtx_count;
    if (hole == 0) hole = rec.len;
    if (!newest || rec.delivered > newest_copy.delivered ||
        (rec.delivered == newest_copy.delivered && rec.sent_at >= newest_copy.sent_at)) {
      newest_copy = rec;
      newest = &newest_copy;
    }
    ++info.acked_segments;
    ledger_.pop_front();
  }
  // One cumulative ACK fills the hole; the rest was already credited by duplicate ACKs.
  if (info.newly_acked - hole >= st_.sacked_out) {
    info.delivered_bytes = info.newly_acked - st_.sacked_out;
    st_.sacked_out = 0;
  } else {
    info.delivered_bytes = hole;
    st_.sacked_out -= info.newly_acked - hole;
  }
  st_.delivered += info.delivered_bytes;
  st_.snd_una = ack_seq;
  st_.flight_size = st_.snd_nxt - st_.snd_una;
  st_.dup_ack_count = 0;
  st_.delivered_time = now;
  if (st_.app_limited != 0 && st_.delivered > st_.app_limited) st_.app_limited = 0;

  if (newest) {
    if (karn_clean) {
      info.rtt = now - newest->sent_at;
      updateRttEstimator(st_, info.rtt);
    }
    RateSample& rs = info.rs;
    rs.prior_delivered = newest->delivered;
    rs.delivered = st_.delivered - newest->delivered;
    rs.is_app_limited = newest->app_limited;
    st_.first_sent_time = newest->sent_at;
    const TimeNs send_elapsed = newest->sent_at - newest->first_sent_time;
    const TimeNs ack_elapsed = st_.delivered_time - newest->delivered_time;
    rs.interval = std::max(send_elapsed, ack_elapsed);
    if (rs.interval > 0 && (!st_.has_rtt || rs.interval >= st_.min_rtt)) {
      rs.valid = true;
      rs.delivery_rate = static_cast<double>(rs.delivered) / toSeconds(rs.interval);
    }
  }

  if (rto_recovery_ && st_.snd_una >= rto_recover_) rto_recovery_ = false;

  bool restart_timer = true;
  if (st_.in_fast_recovery) {
    if (ack_seq >= st_.recover) {
      info.kind = AckKind::RecoveryExit;
      st_.in_fast_recovery = false;
    } else {
      info.kind = AckKind::PartialAdvance;
      fast_rtx_pending_ = true;
      // Impatient variant: only the first partial ACK restarts the timer.
      restart_timer = partial_acks_++ == 0;
    }
  } else {
    info.kind = AckKind::Advance;
  }
  if (st_.flight_size == 0) {
    rto_deadline_.reset();
  } else if (restart_timer || !rto_deadline_) {
    rto_deadline_ = now + st_.rto;
  }
  cc.onAck(index, info);
  return info;
}

std::optional<DsnRange> Subflow::onRto(TimeNs now, CongestionController& cc, int index) {
  if (st_.flight_size == 0 || ledger_.empty()) {
    rto_deadline_.reset();
    return std::nullopt;
  }
  SegmentRecord& head = ledger_.front();
  cc.onRto(index, now, head.rto_resent);
  for (SegmentRecord& rec : ledger_) {
    if (!rec.lost) {
      rec.lost = true;
      st_.pipe -= rec.len;
      lost_pending_bytes_ += rec.len;
      st_.lost_total += rec.len;
    }
  }
  lost_cursor_ = head.subflow_seq;
  head.rto_resent = true;
  fast_rtx_pending_ = false;
  st_.in_fast_recovery = false;
  st_.dup_ack_count = 0;
  rto_recovery_ = true;
  rto_recover_ = st_.snd_nxt;
  ++st_.timeouts;
  st_.rto = std::min(st_.rto * 2, kRtoCeiling);
  rto_deadline_ = now + st_.rto;
  return DsnRange{head.dsn, head.len, head.checksum};
}

void SubflowReceiver::onSegment(std::uint64_t seq, const ReceivedSegment& seg, std::vector<ReceivedSegment>& ready) {
  if (seq + seg.len <= rcv_nxt_) return;
  if (seq > rcv_nxt_) {
    if (ofo_.emplace(seq, seg).second) buffered_bytes_ += seg.len;
    return;
  }
  ready.push_back(seg);
  rcv_nxt_ = seq + seg.len;
  for (auto it = ofo_.begin(); it != ofo_.end() && it->first <= rcv_nxt_;) {
    if (it->first + it->second.len > rcv_nxt_) {
      ready.push_back(it->second);
      rcv_nxt_ = it->first + it->second.len;
    }
    buffered_bytes_ -= it->second.len;
    it = ofo_.erase(it);
  }
}

}  // namespace mpsim
