#pragma once

#include <vector>

#include "mpsim/congestion.hpp"

namespace mpsim {

namespace cubic {

struct Params {
  double c = 0.4;
  double beta = 0.2;
  bool tcp_friendliness = true;
  bool fast_convergence = true;
};

// Windows in packets, times in seconds.
struct State {
  double w_last_max = 0;
  double epoch_start = 0;
  double origin_point = 0;
  double d_min = 0;
  double w_tcp = 0;
  double k = 0;
  double ack_cnt = 0;
  double cwnd_cnt = 0;
  double cnt = 0;
};

void reset(State& s);
double update(State& s, const Params& p, double cwnd, double now);
// rtt < 0 leaves dMin untouched.
void onAck(State& s, const Params& p, double& cwnd, double ssthresh, double now, double rtt);
void onLoss(State& s, const Params& p, double& cwnd, double& ssthresh);

}  // namespace cubic

class CubicController : public CongestionController {
 public:
  explicit CubicController(cubic::Params p = {}) : p_(p) {}
  std::string_view name() const override { return "cubic"; }
  void init(int r, TimeNs now) override;
  const cubic::State& cubicState(int r) const { return st_[r]; }

 protected:
  void increase(int r, const AckInfo& info) override;
  double onLoss(int r, const AckInfo& info) override;
  void onTimeout(int r, TimeNs now) override;

 private:
  cubic::Params p_;
  std::vector<cubic::State> st_;
};

}  // namespace mpsim
