#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "mpsim/congestion.hpp"
#include "mpsim/rng.hpp"

namespace mpsim {

namespace bbr {

enum class Mode : std::uint8_t { Startup, Drain, ProbeBW, ProbeRTT };
const char* modeName(Mode m);

constexpr TimeNs kInfRtprop = std::numeric_limits<TimeNs>::max();
constexpr int kGainCycleLen = 8;
constexpr double kPacingGainCycle[kGainCycleLen] = {5.0 / 4, 3.0 / 4, 1, 1, 1, 1, 1, 1};

// Byte quantities are payload bytes; rates are payload bytes per second.
struct Params {
  double high_gain = 2.0 / std::log(2.0);
  std::uint64_t btlbw_filter_len = 10;  // rounds
  TimeNs rtprop_filter_len = 10 * kNsPerSec;
  TimeNs probe_rtt_duration = 200 * kNsPerMs;
  double mss = kPayloadMss;
  double initial_cwnd = 3 * kPayloadMss;
  double min_pipe_cwnd = 4 * kPayloadMss;
};

// Windowed max; a sample stamped t stays valid while now - t < window.
class MaxFilter {
 public:
  void reset(double value, std::uint64_t time);
  double update(double value, std::uint64_t time, std::uint64_t window);
  double best() const { return samples_.empty() ? 0.0 : samples_.front().second; }

 private:
  std::deque<std::pair<std::uint64_t, double>> samples_;
};

struct State {
  Mode mode = Mode::Startup;
  MaxFilter btlbw_filter;
  double btlbw = 0;
  TimeNs rtprop = kInfRtprop;
  TimeNs rtprop_stamp = 0;
  bool rtprop_expired = false;
  double pacing_gain = 1;
  double cwnd_gain = 1;
  int cycle_index = 0;
  TimeNs cycle_stamp = 0;
  double full_bw = 0;
  int full_bw_count = 0;
  bool filled_pipe = false;
  std::uint64_t delivered = 0;
  std::uint64_t next_round_delivered = 0;
  std::uint64_t round_count = 0;
  bool round_start = false;
  TimeNs probe_rtt_done_stamp = 0;
  bool probe_rtt_round_done = false;
  double prior_cwnd = 0;
  double send_quantum = 0;
  bool packet_conservation = false;
  bool idle_restart = false;
  double pacing_rate = 0;
  double target_cwnd = 0;
  // Fair-share divisor applied to BtlBw for pacing and inflight; 1 for plain BBR.
  double bw_divisor = 1;
};

struct AckSample {
  TimeNs now = 0;
  double delivery_rate = 0;
  bool is_app_limited = false;
  std::uint64_t packet_size = 0;
  std::uint64_t packet_delivered = 0;
  TimeNs packet_rtt = -1;
  double packets_lost = 0;
  double prior_inflight = 0;
  double packets_in_flight = 0;
  double packets_delivered = 0;
  bool in_loss_recovery = false;
  std::uint64_t c_delivered = 0;
};

void init(State& s, const Params& p, TimeNs now, TimeNs srtt);
double effectiveBw(const State& s);
double inflight(const State& s, const Params& p, double gain);
double saveCwnd(const State& s, double cwnd, bool in_loss_recovery);
void enterProbeBw(State& s, TimeNs now, RngStream& rng);

void updateModelAndState(State& s, const Params& p, double& cwnd, const AckSample& a, RngStream& rng,
                         std::uint64_t& c_app_limited);
void updateControlParameters(State& s, const Params& p, double& cwnd, const AckSample& a);
// Both halves in order.
void onAck(State& s, const Params& p, double& cwnd, const AckSample& a, RngStream& rng, std::uint64_t& c_app_limited);
void onTransmit(State& s, double packets_in_flight, bool c_app_limited);

}  // namespace bbr

namespace cmpbbr {

struct Params {
  double alpha = 20;
  double beta = 40;
};

struct State {
  int stop_lowest_bw_sf_count = 0;
  int last_number_of_sfs_in_btlneck = 0;
  int final_number_of_sfs_in_btlneck = 1;
};

struct SubflowEntry {
  double bw = 0;
  double del_rt = 0;
};

struct HookResult {
  double effective_bw = 0;
  bool close_this = false;
};

// Runs both goals for subflow `self`; `at_probe_index` is the ProbeBW cycle_index 3 gate.
HookResult probeHook(State& s, const Params& p, std::span<const SubflowEntry> all, std::size_t self,
                     bool at_probe_index);

}  // namespace cmpbbr

class BbrController : public CongestionController {
 public:
  BbrController(std::uint64_t seed, bool coupled, bbr::Params p = {});
  std::string_view name() const override { return coupled_ ? "cmpbbr" : "bbr"; }

  void init(int r, TimeNs now) override;
  void onAck(int r, const AckInfo& info) override;
  void onRto(int r, TimeNs now, bool head_already_resent) override;
  void onTransmit(int r, TimeNs now) override;

  bool paced() const override { return true; }
  double pacingRate(int r) const override { return per_[r].bbr.pacing_rate; }
  bool rateCapped(int r) const override { return per_[r].bbr.bw_divisor > 1; }

  const bbr::State& bbrState(int r) const { return per_[r].bbr; }
  const cmpbbr::State& cmpState(int r) const { return per_[r].cmp; }
  std::uint64_t modeTransitions() const { return transitions_; }
  // Subflows the coupled variant closed.
  const std::vector<int>& closedByController() const { return closed_; }

 private:
  struct PerSubflow {
    bbr::State bbr;
    cmpbbr::State cmp;
    double last_rate = 0;
    std::uint64_t conservation_round = 0;
  };
  void runHook(int r);

  bbr::Params p_;
  bool coupled_;
  RngStream rng_;
  cmpbbr::Params cp_;
  std::vector<PerSubflow> per_;
  std::uint64_t transitions_ = 0;
  std::vector<int> closed_;
};

}  // namespace mpsim
