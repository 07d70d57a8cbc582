#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mpsim/subflow.hpp"
#include "mpsim/time.hpp"

namespace mpsim {

constexpr std::uint64_t kDefaultBufCap = 16ull * 1024 * 1024;

// Label carried with every DSN range so the sink can check what it received.
std::uint64_t segmentChecksum(std::uint64_t dsn, std::uint32_t len);

// max(16 MiB, 2 * sum(bw) * RTT_max), rates in bits per second.
std::uint64_t bufferCapacity(const std::vector<double>& rates_bps, TimeNs rtt_max);

class MetaSender {
 public:
  explicit MetaSender(std::uint64_t buf_cap, std::uint64_t source_bytes = UINT64_MAX);

  std::uint64_t dsnNext() const { return dsn_next_; }
  std::uint64_t dataAcked() const { return data_acked_; }
  std::uint64_t rwnd() const { return rwnd_; }
  std::uint64_t bufCap() const { return buf_cap_; }
  std::size_t rtxQueueSize() const { return rtx_queue_.size(); }
  const std::map<std::uint64_t, DsnRange>& rtxQueue() const { return rtx_queue_; }

  // Bytes of new data the connection window still admits.
  std::uint64_t sendWindow() const;
  // Unsent bytes in a send buffer of buf_cap bytes.
  std::uint64_t remainingBytes() const;
  bool hasPayload() const { return !rtx_queue_.empty() || (sendWindow() > 0 && dsn_next_ < source_bytes_); }
  // Digest of every new-data range handed out, in DSN order.
  std::uint64_t sourceDigest() const { return digest_; }
  bool windowBlocked() const { return rtx_queue_.empty() && sendWindow() == 0 && dsn_next_ < source_bytes_; }

  // Retransmission queue first, then new data. Throws NothingToSend.
  DsnRange nextPayload(std::uint32_t max_len);
  void onDataAck(std::uint64_t data_ack, std::uint64_t rwnd);
  // Dedup by range; ignored once acknowledged.
  void onSubflowTimeout(const DsnRange& range);

 private:
  std::uint64_t buf_cap_;
  std::uint64_t source_bytes_;
  std::uint64_t dsn_next_ = 0;
  std::uint64_t data_acked_ = 0;
  std::uint64_t rwnd_;
  std::map<std::uint64_t, DsnRange> rtx_queue_;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
};

struct OfoStats {
  std::uint64_t samples = 0;
  double mean_bytes = 0;
  std::uint64_t max_bytes = 0;
  double mean_segments = 0;
  std::uint64_t max_segments = 0;
};

struct OfoSample {
  TimeNs time = 0;
  std::uint64_t queued_bytes = 0;
  std::uint64_t queued_segments = 0;
};

class MetaReceiver {
  struct Held {
    ReceivedSegment seg;
    int carrier;
  };

 public:
  explicit MetaReceiver(std::uint64_t buf_cap, std::size_t carriers = 2);

  std::uint64_t dataAck() const { return data_ack_; }
  std::uint64_t ofoBytes() const { return ofo_bytes_; }
  std::size_t ofoSegments() const { return ofo_.size(); }
  template <typename F>
  void forEachHeld(F&& f) const {
    for (const auto& [dsn, h] : ofo_) f(h.seg);
  }
  std::uint64_t bufCap() const { return buf_cap_; }
  // buf_cap minus bytes held at either level.
  std::uint64_t advertise(std::uint64_t subflow_buffered) const;

  // Returns bytes newly delivered to the application. Throws WindowOverflow.
  std::uint64_t onSegment(const ReceivedSegment& seg, int carrier);

  std::uint64_t deliveredBytes() const { return delivered_; }
  std::uint64_t deliveredBy(int carrier) const { return by_carrier_[carrier]; }
  std::uint64_t duplicateBytes() const { return duplicate_bytes_; }
  std::uint64_t checksumErrors() const { return checksum_errors_; }
  std::uint64_t deliveredSegments() const { return delivered_segments_; }
  // Digest of the delivered stream in order.
  std::uint64_t sinkDigest() const { return digest_; }

 private:
  void deliver(const ReceivedSegment& seg, int carrier);

  std::uint64_t buf_cap_;
  std::uint64_t data_ack_ = 0;
  std::map<std::uint64_t, Held> ofo_;
  std::uint64_t ofo_bytes_ = 0;
  std::uint64_t delivered_ = 0;
  std::vector<std::uint64_t> by_carrier_;
  std::uint64_t duplicate_bytes_ = 0;
  std::uint64_t checksum_errors_ = 0;
  std::uint64_t delivered_segments_ = 0;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
};

// Digest a sink would report after receiving [0, bytes) in mss-sized segments.
std::uint64_t expectedDigest(std::uint64_t bytes, std::uint32_t mss);

}  // namespace mpsim
