#include "mpsim/meta.hpp"

#include <algorithm>
#include <cmath>

#include "mpsim/error.hpp"
#include "mpsim/rng.hpp"

namespace mpsim {

std::uint64_t segmentChecksum(std::uint64_t dsn, std::uint32_t len) { return mixSeed(dsn, len); }

std::uint64_t bufferCapacity(const std::vector<double>& rates_bps, TimeNs rtt_max) {
  double sum = 0;
  for (double r : rates_bps) sum += r;
  const double bdp2 = 2.0 * sum / 8.0 * toSeconds(rtt_max);
  return std::max<std::uint64_t>(kDefaultBufCap, static_cast<std::uint64_t>(std::ceil(bdp2)));
}

MetaSender::MetaSender(std::uint64_t buf_cap, std::uint64_t source_bytes)
    : buf_cap_(buf_cap), source_bytes_(source_bytes), rwnd_(buf_cap) {}

std::uint64_t MetaSender::sendWindow() const {
  const std::uint64_t edge = data_acked_ + rwnd_;
  return edge > dsn_next_ ? edge - dsn_next_ : 0;
}

std::uint64_t MetaSender::remainingBytes() const {
  const std::uint64_t edge = std::min(data_acked_ + buf_cap_, source_bytes_);
  return edge > dsn_next_ ? edge - dsn_next_ : 0;
}

DsnRange MetaSender::nextPayload(std::uint32_t max_len) {
  while (!rtx_queue_.empty()) {
    auto it = rtx_queue_.begin();
    const DsnRange r = it->second;
    rtx_queue_.erase(it);
    if (r.dsn + r.len > data_acked_) return r;
  }
  const std::uint64_t room = std::min(sendWindow(), source_bytes_ - dsn_next_);
  if (room == 0 || max_len == 0) throw NothingToSend("no retransmission pending and window closed");
  const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(room, max_len));
  DsnRange r{dsn_next_, len, segmentChecksum(dsn_next_, len)};
  dsn_next_ += len;
  digest_ = mixSeed(digest_, mixSeed(r.dsn, r.len));
  return r;
}

void MetaSender::onDataAck(std::uint64_t data_ack, std::uint64_t rwnd) {
  if (data_ack < data_acked_) return;
  data_acked_ = data_ack;
  rwnd_ = rwnd;
  while (!rtx_queue_.empty()) {
    const DsnRange& r = rtx_queue_.begin()->second;
    if (r.dsn + r.len > data_acked_) break;
    rtx_queue_.erase(rtx_queue_.begin());
  }
}

void MetaSender::onSubflowTimeout(const DsnRange& range) {
  if (range.dsn + range.len <= data_acked_) return;
  rtx_queue_.emplace(range.dsn, range);
}

MetaReceiver::MetaReceiver(std::uint64_t buf_cap, std::size_t carriers) : buf_cap_(buf_cap), by_carrier_(carriers, 0) {}

std::uint64_t MetaReceiver::advertise(std::uint64_t subflow_buffered) const {
  const std::uint64_t held = ofo_bytes_ + subflow_buffered;
  return held >= buf_cap_ ? 0 : buf_cap_ - held;
}

void MetaReceiver::deliver(const ReceivedSegment& seg, int carrier) {
  if (seg.checksum != segmentChecksum(seg.dsn, seg.len)) ++checksum_errors_;
  digest_ = mixSeed(digest_, mixSeed(seg.dsn, seg.len));
  data_ack_ = seg.dsn + seg.len;
  delivered_ += seg.len;
  by_carrier_[carrier] += seg.len;
  ++delivered_segments_;
}

std::uint64_t MetaReceiver::onSegment(const ReceivedSegment& seg, int carrier) {
  const std::uint64_t end = seg.dsn + seg.len;
  if (end > data_ack_ + buf_cap_) throw WindowOverflow("segment beyond receive window");
  if (end <= data_ack_ || seg.dsn < data_ack_) {
    duplicate_bytes_ += seg.len;
    return 0;
  }
  if (seg.dsn > data_ack_) {
    if (ofo_.emplace(seg.dsn, Held{seg, carrier}).second) {
      ofo_bytes_ += seg.len;
    } else {
      duplicate_bytes_ += seg.len;
    }
    return 0;
  }
  const std::uint64_t before = delivered_;
  deliver(seg, carrier);
  auto it = ofo_.begin();
  while (it != ofo_.end() && it->first <= data_ack_) {
    const Held& h = it->second;
    if (it->first == data_ack_) {
      deliver(h.seg, h.carrier);
    } else {
      duplicate_bytes_ += h.seg.len;
    }
    ofo_bytes_ -= h.seg.len;
    it = ofo_.erase(it);
  }
  return delivered_ - before;
}

std::uint64_t expectedDigest(std::uint64_t bytes, std::uint32_t mss) {
  std::uint64_t d = 0xcbf29ce484222325ULL;
  for (std::uint64_t dsn = 0; dsn < bytes; dsn += mss) {
    const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(mss, bytes - dsn));
    d = mixSeed(d, mixSeed(dsn, len));
  }
  return d;
}

}  // namespace mpsim
