#include "mpsim/cubic.hpp"

#include <algorithm>
#include <cmath>

namespace mpsim {

namespace cubic {

void reset(State& s) {
  s.w_last_max = 0;
  s.epoch_start = 0;
  s.origin_point = 0;
  s.d_min = 0;
  s.w_tcp = 0;
  s.k = 0;
  s.ack_cnt = 0;
}

static void tcpFriendliness(State& s, const Params& p, double cwnd) {
  s.w_tcp += 3 * p.beta / (2 - p.beta) * s.ack_cnt / cwnd;
  s.ack_cnt = 0;
  if (s.w_tcp > cwnd) {
    const double max_cnt = cwnd / (s.w_tcp - cwnd);
    if (s.cnt > max_cnt) s.cnt = max_cnt;
  }
}

double update(State& s, const Params& p, double cwnd, double now) {
  s.ack_cnt += 1;
  if (s.epoch_start <= 0) {
    s.epoch_start = now;
    if (cwnd < s.w_last_max) {
      s.k = std::cbrt((s.w_last_max - cwnd) / p.c);
      s.origin_point = s.w_last_max;
    } else {
      s.k = 0;
      s.origin_point = cwnd;
    }
    s.ack_cnt = 1;
    s.w_tcp = cwnd;
  }
  const double t = now + s.d_min - s.epoch_start;
  const double target = s.origin_point + p.c * (t - s.k) * (t - s.k) * (t - s.k);
  s.cnt = target > cwnd ? cwnd / (target - cwnd) : 100 * cwnd;
  if (p.tcp_friendliness) tcpFriendliness(s, p, cwnd);
  return s.cnt;
}

void onAck(State& s, const Params& p, double& cwnd, double ssthresh, double now, double rtt) {
  if (rtt >= 0) s.d_min = s.d_min != 0 ? std::min(s.d_min, rtt) : rtt;
  if (cwnd <= ssthresh) {
    cwnd += 1;
    return;
  }
  const double cnt = update(s, p, cwnd, now);
  if (s.cwnd_cnt > cnt) {
    cwnd += 1;
    s.cwnd_cnt = 0;
  } else {
    s.cwnd_cnt += 1;
  }
}

void onLoss(State& s, const Params& p, double& cwnd, double& ssthresh) {
  s.epoch_start = 0;
  if (cwnd < s.w_last_max && p.fast_convergence)
    s.w_last_max = cwnd * (2 - p.beta) / 2;
  else
    s.w_last_max = cwnd;
  cwnd = cwnd * (1 - p.beta);
  ssthresh = cwnd;
}

}  // namespace cubic

void CubicController::init(int r, TimeNs now) {
  CongestionController::init(r, now);
  if (st_.size() < size()) st_.resize(size());
  cubic::reset(st_[r]);
  st_[r].cwnd_cnt = 0;
  st_[r].cnt = 0;
}

void CubicController::increase(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  double cwnd = s.cwnd / s.smss;
  const double ssthresh = s.ssthresh / s.smss;
  const double rtt = info.rtt >= 0 ? toSeconds(info.rtt) : -1.0;
  // Stretch ACKs count once per covered segment in congestion avoidance only.
  const std::uint32_t n = cwnd <= ssthresh ? 1 : std::max<std::uint32_t>(1, info.acked_segments);
  for (std::uint32_t i = 0; i < n; ++i) cubic::onAck(st_[r], p_, cwnd, ssthresh, toSeconds(info.now), i == 0 ? rtt : -1.0);
  s.cwnd = cwnd * s.smss;
}

double CubicController::onLoss(int r, const AckInfo& /*info*/) {
  SubflowState& s = sub(r);
  double cwnd = s.cwnd / s.smss;
  double ssthresh = s.ssthresh / s.smss;
  cubic::onLoss(st_[r], p_, cwnd, ssthresh);
  return std::max(ssthresh * s.smss, 2 * s.smss);
}

void CubicController::onTimeout(int r, TimeNs /*now*/) { cubic::reset(st_[r]); }

}  // namespace mpsim
