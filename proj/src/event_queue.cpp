#include "mpsim/event_queue.hpp"

#include <algorithm>
#include <string>

namespace mpsim {

EventHandle EventQueue::schedule(TimeNs fire_at, EventKind kind, std::uint32_t target,
                                 std::uint64_t payload) {
  if (fire_at < now_) {
    throw PastEvent("event at " + std::to_string(fire_at) + " ns scheduled at " +
                    std::to_string(now_) + " ns");
  }
  const EventHandle handle = next_seq_++;
  heap_.push_back(SimEvent{fire_at, handle, kind, target, payload});
  std::push_heap(heap_.begin(), heap_.end(), later);
  return handle;
}

bool EventQueue::cancel(EventHandle handle) {
  if (handle >= next_seq_) return false;
  const bool live = std::any_of(heap_.begin(), heap_.end(),
                                [&](const SimEvent& e) { return e.seq_no == handle; });
  if (!live) return false;
  return cancelled_.insert(handle).second;
}

SimEvent EventQueue::popTop() {
  std::pop_heap(heap_.begin(), heap_.end(), later);
  SimEvent ev = heap_.back();
  heap_.pop_back();
  return ev;
}

void EventQueue::absorb(const SimEvent& ev) {
  auto mix = [this](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      trace_hash_ ^= (v >> (8 * i)) & 0xffU;
      trace_hash_ *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(ev.fire_at));
  mix((static_cast<std::uint64_t>(ev.kind) << 32) | ev.target);
  mix(ev.payload);
}

}  // namespace mpsim
