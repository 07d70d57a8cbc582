#include "mpsim/bbr.hpp"

#include <algorithm>

namespace mpsim {

namespace bbr {

const char* modeName(Mode m) {
  switch (m) {
    case Mode::Startup: return "Startup";
    case Mode::Drain: return "Drain";
    case Mode::ProbeBW: return "ProbeBW";
    case Mode::ProbeRTT: return "ProbeRTT";
  }
  return "?";
}

void MaxFilter::reset(double value, std::uint64_t time) {
  samples_.clear();
  samples_.emplace_back(time, value);
}

double MaxFilter::update(double value, std::uint64_t time, std::uint64_t window) {
  while (!samples_.empty() && samples_.back().second <= value) samples_.pop_back();
  samples_.emplace_back(time, value);
  while (time - samples_.front().first >= window) samples_.pop_front();
  return samples_.front().second;
}

namespace {

constexpr double kRate1_2Mbps = 1.2e6 / 8;
constexpr double kRate24Mbps = 24e6 / 8;
constexpr double kMaxQuantum = 64 * 1024;

void enterStartup(State& s, const Params& p) {
  s.mode = Mode::Startup;
  s.pacing_gain = p.high_gain;
  s.cwnd_gain = p.high_gain;
}

void enterDrain(State& s, const Params& p) {
  s.mode = Mode::Drain;
  s.pacing_gain = 1 / p.high_gain;
  s.cwnd_gain = p.high_gain;
}

void enterProbeRtt(State& s) {
  s.mode = Mode::ProbeRTT;
  s.pacing_gain = 1;
  s.cwnd_gain = 1;
}

void advanceCyclePhase(State& s, TimeNs now) {
  s.cycle_stamp = now;
  s.cycle_index = (s.cycle_index + 1) % kGainCycleLen;
  s.pacing_gain = kPacingGainCycle[s.cycle_index];
}

bool isNextCyclePhase(const State& s, const Params& p, const AckSample& a) {
  const bool is_full_length = s.rtprop != kInfRtprop && (a.now - s.cycle_stamp) > s.rtprop;
  if (s.pacing_gain == 1) return is_full_length;
  if (s.pacing_gain > 1) return is_full_length && (a.packets_lost > 0 || a.prior_inflight >= inflight(s, p, s.pacing_gain));
  return is_full_length || a.prior_inflight <= inflight(s, p, 1);
}

void updateRound(State& s, const AckSample& a) {
  s.delivered += a.packet_size;
  if (a.packet_delivered >= s.next_round_delivered) {
    s.next_round_delivered = s.delivered;
    s.round_count++;
    s.round_start = true;
  } else {
    s.round_start = false;
  }
}

void updateBtlBw(State& s, const Params& p, const AckSample& a) {
  updateRound(s, a);
  if (a.delivery_rate >= s.btlbw || !a.is_app_limited)
    s.btlbw = s.btlbw_filter.update(a.delivery_rate, s.round_count, p.btlbw_filter_len);
}

void checkFullPipe(State& s, const AckSample& a) {
  if (s.filled_pipe || !s.round_start || a.is_app_limited) return;
  if (s.btlbw >= s.full_bw * 1.25) {
    s.full_bw = s.btlbw;
    s.full_bw_count = 0;
    return;
  }
  s.full_bw_count++;
  if (s.full_bw_count >= 3) s.filled_pipe = true;
}

void checkDrain(State& s, const Params& p, const AckSample& a, RngStream& rng) {
  if (s.mode == Mode::Startup && s.filled_pipe) enterDrain(s, p);
  if (s.mode == Mode::Drain && a.packets_in_flight <= inflight(s, p, 1.0)) enterProbeBw(s, a.now, rng);
}

void updateRtprop(State& s, const Params& p, const AckSample& a) {
  s.rtprop_expired = a.now > s.rtprop_stamp + p.rtprop_filter_len;
  if (a.packet_rtt >= 0 && (a.packet_rtt <= s.rtprop || s.rtprop_expired)) {
    s.rtprop = a.packet_rtt;
    s.rtprop_stamp = a.now;
  }
}

void exitProbeRtt(State& s, const Params& p, TimeNs now, RngStream& rng) {
  if (s.filled_pipe)
    enterProbeBw(s, now, rng);
  else
    enterStartup(s, p);
}

void handleProbeRtt(State& s, const Params& p, double& cwnd, const AckSample& a, RngStream& rng,
                    std::uint64_t& c_app_limited) {
  const std::uint64_t mark = a.c_delivered + static_cast<std::uint64_t>(a.packets_in_flight);
  c_app_limited = mark != 0 ? mark : 1;
  if (s.probe_rtt_done_stamp == 0 && a.packets_in_flight <= p.min_pipe_cwnd) {
    s.probe_rtt_done_stamp = a.now + p.probe_rtt_duration;
    s.probe_rtt_round_done = false;
    s.next_round_delivered = s.delivered;
  } else if (s.probe_rtt_done_stamp != 0) {
    if (s.round_start) s.probe_rtt_round_done = true;
    if (s.probe_rtt_round_done && a.now > s.probe_rtt_done_stamp) {
      s.rtprop_stamp = a.now;
      cwnd = std::max(cwnd, s.prior_cwnd);
      exitProbeRtt(s, p, a.now, rng);
    }
  }
}

void checkProbeRtt(State& s, const Params& p, double& cwnd, const AckSample& a, RngStream& rng,
                   std::uint64_t& c_app_limited) {
  if (s.mode != Mode::ProbeRTT && s.rtprop_expired && !s.idle_restart) {
    enterProbeRtt(s);
    s.prior_cwnd = saveCwnd(s, cwnd, a.in_loss_recovery);
    s.probe_rtt_done_stamp = 0;
  }
  if (s.mode == Mode::ProbeRTT) handleProbeRtt(s, p, cwnd, a, rng, c_app_limited);
  s.idle_restart = false;
}

void setPacingRateWithGain(State& s, double gain) {
  const double rate = gain * effectiveBw(s);
  if (s.filled_pipe || rate > s.pacing_rate) s.pacing_rate = rate;
}

void setSendQuantum(State& s, const Params& p) {
  if (s.pacing_rate < kRate1_2Mbps)
    s.send_quantum = 1 * p.mss;
  else if (s.pacing_rate < kRate24Mbps)
    s.send_quantum = 2 * p.mss;
  else
    s.send_quantum = std::min(s.pacing_rate * 1e-3, kMaxQuantum);
}

void setCwnd(State& s, const Params& p, double& cwnd, const AckSample& a) {
  s.target_cwnd = inflight(s, p, s.cwnd_gain);
  if (a.packets_lost > 0) cwnd = std::max(cwnd - a.packets_lost, p.mss);
  if (s.packet_conservation) cwnd = std::max(cwnd, a.packets_in_flight + a.packets_delivered);
  if (!s.packet_conservation) {
    if (s.filled_pipe)
      cwnd = std::min(cwnd + a.packets_delivered, s.target_cwnd);
    else if (cwnd < s.target_cwnd || static_cast<double>(s.delivered) < p.initial_cwnd)
      cwnd = cwnd + a.packets_delivered;
    cwnd = std::max(cwnd, p.min_pipe_cwnd);
  }
  if (s.mode == Mode::ProbeRTT) cwnd = std::min(cwnd, p.min_pipe_cwnd);
}

}  // namespace

void init(State& s, const Params& p, TimeNs now, TimeNs srtt) {
  s = State{};
  s.btlbw_filter.reset(0, 0);
  s.btlbw = 0;
  s.rtprop = srtt > 0 ? srtt : kInfRtprop;
  s.rtprop_stamp = now;
  s.probe_rtt_done_stamp = 0;
  s.probe_rtt_round_done = false;
  s.packet_conservation = false;
  s.prior_cwnd = 0;
  s.idle_restart = false;
  s.next_round_delivered = 0;
  s.round_start = false;
  s.round_count = 0;
  s.filled_pipe = false;
  s.full_bw = 0;
  s.full_bw_count = 0;
  const double nominal_bandwidth = p.initial_cwnd / toSeconds(srtt > 0 ? srtt : kNsPerMs);
  s.pacing_rate = p.high_gain * nominal_bandwidth;
  enterStartup(s, p);
}

double effectiveBw(const State& s) { return s.btlbw / s.bw_divisor; }

double inflight(const State& s, const Params& p, double gain) {
  if (s.rtprop == kInfRtprop) return p.initial_cwnd;
  const double quanta = 3 * s.send_quantum;
  const double estimated_bdp = effectiveBw(s) * toSeconds(s.rtprop);
  return gain * estimated_bdp + quanta;
}

double saveCwnd(const State& s, double cwnd, bool in_loss_recovery) {
  if (!in_loss_recovery && s.mode != Mode::ProbeRTT) return cwnd;
  return std::max(s.prior_cwnd, cwnd);
}

void enterProbeBw(State& s, TimeNs now, RngStream& rng) {
  s.mode = Mode::ProbeBW;
  s.pacing_gain = 1;
  s.cwnd_gain = 2;
  s.cycle_index = kGainCycleLen - 1 - rng.uniformInt(0, 6);
  advanceCyclePhase(s, now);
}

void updateModelAndState(State& s, const Params& p, double& cwnd, const AckSample& a, RngStream& rng,
                         std::uint64_t& c_app_limited) {
  updateBtlBw(s, p, a);
  if (s.mode == Mode::ProbeBW && isNextCyclePhase(s, p, a)) advanceCyclePhase(s, a.now);
  checkFullPipe(s, a);
  checkDrain(s, p, a, rng);
  updateRtprop(s, p, a);
  checkProbeRtt(s, p, cwnd, a, rng, c_app_limited);
}

void updateControlParameters(State& s, const Params& p, double& cwnd, const AckSample& a) {
  setPacingRateWithGain(s, s.pacing_gain);
  setSendQuantum(s, p);
  setCwnd(s, p, cwnd, a);
}

void onAck(State& s, const Params& p, double& cwnd, const AckSample& a, RngStream& rng, std::uint64_t& c_app_limited) {
  updateModelAndState(s, p, cwnd, a, rng, c_app_limited);
  updateControlParameters(s, p, cwnd, a);
}

void onTransmit(State& s, double packets_in_flight, bool c_app_limited) {
  if (packets_in_flight == 0 && c_app_limited) {
    s.idle_restart = true;
    if (s.mode == Mode::ProbeBW) setPacingRateWithGain(s, 1);
  }
}

}  // namespace bbr

namespace cmpbbr {

HookResult probeHook(State& s, const Params& p, std::span<const SubflowEntry> all, std::size_t self,
                     bool at_probe_index) {
  HookResult out;
  const double bw_this = all[self].bw;

  double total_del_rt = 0;
  double lowest = 999999999;
  double highest = 0;
  int total_number_of_sfs = 0;
  if (at_probe_index) {
    for (const SubflowEntry& e : all) {
      total_number_of_sfs++;
      total_del_rt += e.del_rt;
      if (lowest > e.bw) lowest = e.bw;
      if (highest < e.bw) highest = e.bw;
    }
  }
  const double threshold = highest * (1 - p.beta / 100);
  if (threshold > total_del_rt && s.last_number_of_sfs_in_btlneck < 2 && total_number_of_sfs > 1 && lowest != highest)
    s.stop_lowest_bw_sf_count++;
  else
    s.stop_lowest_bw_sf_count = 0;
  if (s.stop_lowest_bw_sf_count >= 5 && total_number_of_sfs > 1 && bw_this == lowest) {
    s.stop_lowest_bw_sf_count = 5;
    out.close_this = true;
  }

  int number_of_sfs_in_btlneck = 0;
  if (at_probe_index) {
    const double lower = bw_this * (1 - p.alpha / 100);
    const double upper = bw_this * (1 + p.alpha / 100);
    for (const SubflowEntry& e : all)
      if (e.bw >= lower && e.bw <= upper) number_of_sfs_in_btlneck++;
    if (number_of_sfs_in_btlneck > 1 && s.last_number_of_sfs_in_btlneck > 1)
      s.final_number_of_sfs_in_btlneck = number_of_sfs_in_btlneck;
    else if (number_of_sfs_in_btlneck == 1 && s.last_number_of_sfs_in_btlneck > 1)
      s.final_number_of_sfs_in_btlneck = s.last_number_of_sfs_in_btlneck;
    else
      s.final_number_of_sfs_in_btlneck = 1;
    s.last_number_of_sfs_in_btlneck = number_of_sfs_in_btlneck;
  }
  out.effective_bw = bw_this / s.final_number_of_sfs_in_btlneck;
  return out;
}

}  // namespace cmpbbr

BbrController::BbrController(std::uint64_t seed, bool coupled, bbr::Params p)
    : p_(p), coupled_(coupled), rng_(seed, coupled ? "cmpbbr" : "bbr") {}

void BbrController::init(int r, TimeNs now) {
  if (per_.size() < size()) per_.resize(size());
  SubflowState& s = sub(r);
  p_.mss = s.smss;
  p_.initial_cwnd = 3 * s.smss;
  p_.min_pipe_cwnd = 4 * s.smss;
  per_[r] = PerSubflow{};
  bbr::init(per_[r].bbr, p_, now, s.has_rtt ? s.srtt : 0);
  s.cwnd = p_.initial_cwnd;
  s.ssthresh = kInfiniteSsthresh;
  s.dupacks_leave_pipe = true;
}

void BbrController::runHook(int r) {
  std::vector<cmpbbr::SubflowEntry> reg;
  std::size_t self = 0;
  for (int i = 0; i < static_cast<int>(size()); ++i) {
    if (sub(i).closed) continue;
    if (i == r) self = reg.size();
    reg.push_back({per_[i].bbr.btlbw, per_[i].last_rate});
  }
  PerSubflow& ps = per_[r];
  const cmpbbr::HookResult res = cmpbbr::probeHook(ps.cmp, cp_, reg, self, true);
  ps.bbr.bw_divisor = ps.cmp.final_number_of_sfs_in_btlneck;
  if (res.close_this && !sub(r).closed) {
    sub(r).closed = true;
    closed_.push_back(r);
  }
}

void BbrController::onAck(int r, const AckInfo& info) {
  if (info.kind == AckKind::Stale) return;
  SubflowState& s = sub(r);
  PerSubflow& ps = per_[r];

  bbr::AckSample a;
  a.now = info.now;
  a.delivery_rate = info.rs.valid ? info.rs.delivery_rate : 0;
  a.is_app_limited = info.rs.valid ? info.rs.is_app_limited : true;
  a.packet_size = info.delivered_bytes;
  a.packet_delivered = info.newly_acked > 0 ? info.rs.prior_delivered : 0;
  a.packet_rtt = info.rtt;
  a.packets_lost = static_cast<double>(info.lost_bytes);
  a.prior_inflight = static_cast<double>(info.prior_inflight);
  a.packets_in_flight = static_cast<double>(inFlight(s));
  a.packets_delivered = static_cast<double>(info.delivered_bytes);
  a.in_loss_recovery = s.in_fast_recovery;
  a.c_delivered = s.delivered;

  if (info.kind == AckKind::EnterRecovery) {
    ps.bbr.prior_cwnd = bbr::saveCwnd(ps.bbr, s.cwnd, false);
    s.cwnd = a.packets_in_flight + std::max(a.packets_delivered, s.smss);
    ps.bbr.packet_conservation = true;
    ps.conservation_round = ps.bbr.round_count;
  }

  const bbr::Mode before_mode = ps.bbr.mode;
  const int before_index = ps.bbr.cycle_index;
  bbr::updateModelAndState(ps.bbr, p_, s.cwnd, a, rng_, s.app_limited);
  if (ps.bbr.mode != before_mode) ++transitions_;
  if (coupled_ && ps.bbr.mode == bbr::Mode::ProbeBW && ps.bbr.cycle_index == 3 &&
      (before_mode != bbr::Mode::ProbeBW || before_index != 3))
    runHook(r);
  if (ps.bbr.packet_conservation && ps.bbr.round_start && ps.bbr.round_count > ps.conservation_round)
    ps.bbr.packet_conservation = false;
  bbr::updateControlParameters(ps.bbr, p_, s.cwnd, a);

  if (info.kind == AckKind::RecoveryExit) {
    s.cwnd = std::max(s.cwnd, ps.bbr.prior_cwnd);
    ps.bbr.packet_conservation = false;
  }
  if (info.rs.valid) ps.last_rate = info.rs.delivery_rate;
}

void BbrController::onRto(int r, TimeNs /*now*/, bool /*head_already_resent*/) {
  SubflowState& s = sub(r);
  PerSubflow& ps = per_[r];
  ps.bbr.prior_cwnd = bbr::saveCwnd(ps.bbr, s.cwnd, s.in_fast_recovery);
  ps.bbr.packet_conservation = false;
  s.cwnd = s.smss;
}

void BbrController::onTransmit(int r, TimeNs /*now*/) {
  const SubflowState& s = sub(r);
  bbr::onTransmit(per_[r].bbr, static_cast<double>(inFlight(s)), s.app_limited != 0);
}

}  // namespace mpsim
