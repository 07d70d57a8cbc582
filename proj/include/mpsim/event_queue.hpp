#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "mpsim/error.hpp"
#include "mpsim/time.hpp"

namespace mpsim {

enum class EventKind : std::uint8_t { PacketArrival, TimerExpiry, AppWrite, SampleTick };

struct SimEvent {
  TimeNs fire_at = 0;
  std::uint64_t seq_no = 0;
  EventKind kind = EventKind::TimerExpiry;
  std::uint32_t target = 0;
  std::uint64_t payload = 0;
};

using EventHandle = std::uint64_t;

class EventQueue {
 public:
  TimeNs now() const { return now_; }
  std::size_t pending() const { return heap_.size() - cancelled_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }
  // Running digest of every dispatched (fire_at, kind, target, payload).
  std::uint64_t traceHash() const { return trace_hash_; }

  EventHandle schedule(TimeNs fire_at, EventKind kind, std::uint32_t target = 0,
                       std::uint64_t payload = 0);
  // Returns false if the handle is unknown or already cancelled.
  bool cancel(EventHandle handle);

  template <typename Dispatch>
  std::uint64_t runUntil(TimeNs deadline, Dispatch&& dispatch) {
    if (deadline < now_) throw PastEvent("run_until deadline precedes clock");
    std::uint64_t count = 0;
    while (!heap_.empty() && heap_.front().fire_at <= deadline) {
      SimEvent ev = popTop();
      if (!cancelled_.empty() && cancelled_.erase(ev.seq_no) > 0) continue;
      now_ = ev.fire_at;
      ++count;
      ++dispatched_;
      absorb(ev);
      dispatch(ev);
    }
    now_ = deadline;
    return count;
  }

 private:
  static bool later(const SimEvent& a, const SimEvent& b) {
    return a.fire_at != b.fire_at ? a.fire_at > b.fire_at : a.seq_no > b.seq_no;
  }
  SimEvent popTop();
  void absorb(const SimEvent& ev);

  std::vector<SimEvent> heap_;
  std::unordered_set<std::uint64_t> cancelled_;
  TimeNs now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::uint64_t trace_hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace mpsim
