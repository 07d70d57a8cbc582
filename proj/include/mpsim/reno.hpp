#pragma once

#include <algorithm>
#include <cstdint>

namespace mpsim::reno {

// 2, 3 or 4 segments depending on the segment size band.
inline double initialWindow(double smss) {
  if (smss > 2190) return 2 * smss;
  if (smss > 1095) return 3 * smss;
  return 4 * smss;
}

inline double allowedSend(double cwnd, double rwnd, double flight) {
  return std::max(0.0, std::min(cwnd, rwnd) - flight);
}

inline double slowStartIncrease(double newly_acked, double smss) { return std::min(newly_acked, smss); }

inline double avoidanceIncrease(double cwnd, double smss) { return smss * smss / cwnd; }

inline double ackCwnd(double cwnd, double ssthresh, double newly_acked, double smss) {
  if (cwnd < ssthresh) return cwnd + slowStartIncrease(newly_acked, smss);
  return cwnd + avoidanceIncrease(cwnd, smss);
}

inline double lossSsthresh(double flight, double smss) { return std::max(flight / 2.0, 2.0 * smss); }

inline double recoveryCwnd(double ssthresh, double smss) { return ssthresh + 3.0 * smss; }

inline double timeoutCwnd(double smss) { return smss; }

}  // namespace mpsim::reno
