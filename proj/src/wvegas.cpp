#include "mpsim/wvegas.hpp"

#include <algorithm>

#include "mpsim/error.hpp"
#include "mpsim/reno.hpp"

namespace mpsim {

namespace wvegas {

void init(State& s, std::size_t n) {
  s.total_alpha = 10;
  s.alpha.assign(n, 2.0);
  s.weights.assign(n, 0.0);
  s.equilibrium_rates.assign(n, 0.0);
  s.queue_delays.assign(n, 0.0);
  s.base_rtt.assign(n, 0.0);
  s.sampled_rtts.assign(n, 0.0);
  s.sampled_num.assign(n, 0);
}

void adjustWeights(State& s) {
  double total_rate = 0;
  for (double r : s.equilibrium_rates) total_rate += r;
  for (std::size_t r = 0; r < s.equilibrium_rates.size(); ++r)
    if (s.equilibrium_rates[r] != 0) s.weights[r] = s.equilibrium_rates[r] / total_rate;
}

namespace {

double roundRtt(const State& s, std::size_t r) {
  if (s.sampled_num[r] == 0) throw NoSamples("no RTT samples in round");
  return s.sampled_rtts[r] / s.sampled_num[r];
}

void tweakAlpha(State& s, std::size_t r, double cwnd, double rtt, double diff) {
  if (diff >= s.alpha[r]) {
    s.equilibrium_rates[r] = cwnd / rtt;
    adjustWeights(s);
    s.alpha[r] = s.weights[r] * s.total_alpha;
    s.alpha[r] = std::max(2.0, s.alpha[r]);
  }
}

}  // namespace

bool slowStartRoundEnd(State& s, std::size_t r, double& cwnd, double& ssthresh, double gamma) {
  const double rtt = roundRtt(s, r);
  const double diff = cwnd * (rtt - s.base_rtt[r]) / rtt;
  tweakAlpha(s, r, cwnd, rtt, diff);
  if (diff <= gamma) return false;
  const double target = cwnd * s.base_rtt[r] / rtt;
  ssthresh = std::min(ssthresh, cwnd - 1);
  cwnd = std::max(2.0, std::min(cwnd, target + 1));
  return true;
}

void roundEnd(State& s, std::size_t r, double& cwnd) {
  const double rtt = roundRtt(s, r);
  const double diff = cwnd * (rtt - s.base_rtt[r]) / rtt;
  tweakAlpha(s, r, cwnd, rtt, diff);
  if (diff < s.alpha[r])
    cwnd += 1;
  else if (diff > s.alpha[r])
    cwnd -= 1;
  const double q = rtt - s.base_rtt[r];
  if (s.queue_delays[r] == 0 || s.queue_delays[r] > q) s.queue_delays[r] = q;
  if (q >= 2 * s.queue_delays[r]) {
    const double backoff_factor = 0.5 * s.base_rtt[r] / rtt;
    cwnd *= backoff_factor;
    s.queue_delays[r] = 0;
  }
  cwnd = std::max(2.0, cwnd);
}

void onLoss(State& s, std::size_t r) {
  s.equilibrium_rates[r] = 0;
  s.queue_delays[r] = 0;
}

}  // namespace wvegas

void WvegasController::init(int r, TimeNs now) {
  CongestionController::init(r, now);
  if (st_.alpha.size() < size()) wvegas::init(st_, size());
  if (round_start_.size() < size()) round_start_.resize(size(), 0);
  round_start_[r] = now;
}

void WvegasController::increase(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  const auto i = static_cast<std::size_t>(r);
  if (info.rtt > 0) {
    const double rtt = toSeconds(info.rtt);
    st_.base_rtt[i] = st_.base_rtt[i] == 0 ? rtt : std::min(st_.base_rtt[i], rtt);
    st_.sampled_rtts[i] += rtt;
    st_.sampled_num[i] += 1;
  }
  const bool slow_start = s.cwnd < s.ssthresh;
  if (slow_start) CongestionController::increase(r, info);
  if (st_.base_rtt[i] == 0 || info.now < round_start_[i] + fromSeconds(st_.base_rtt[i])) return;
  round_start_[i] = info.now;
  if (st_.sampled_num[i] == 0) return;
  double cwnd = s.cwnd / s.smss;
  if (slow_start) {
    double ssthresh = s.ssthresh / s.smss;
    if (wvegas::slowStartRoundEnd(st_, i, cwnd, ssthresh)) s.ssthresh = ssthresh * s.smss;
  } else {
    wvegas::roundEnd(st_, i, cwnd);
  }
  s.cwnd = cwnd * s.smss;
  st_.sampled_rtts[i] = 0;
  st_.sampled_num[i] = 0;
}

double WvegasController::onLoss(int r, const AckInfo& info) {
  wvegas::onLoss(st_, static_cast<std::size_t>(r));
  return CongestionController::onLoss(r, info);
}

void WvegasController::onTimeout(int r, TimeNs now) {
  wvegas::onLoss(st_, static_cast<std::size_t>(r));
  st_.sampled_rtts[r] = 0;
  st_.sampled_num[r] = 0;
  round_start_[r] = now;
}

}  // namespace mpsim
