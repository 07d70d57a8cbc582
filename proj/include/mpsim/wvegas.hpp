#pragma once

#include <vector>

#include "mpsim/congestion.hpp"

namespace mpsim {

namespace wvegas {

struct State {
  double total_alpha = 10;
  std::vector<double> alpha;
  std::vector<double> weights;
  std::vector<double> equilibrium_rates;
  std::vector<double> queue_delays;
  std::vector<double> base_rtt;  // seconds
  std::vector<double> sampled_rtts;
  std::vector<int> sampled_num;
};

void init(State& s, std::size_t n);
void adjustWeights(State& s);
// cwnd in packets. Throws NoSamples when the round collected no RTT samples.
void roundEnd(State& s, std::size_t r, double& cwnd);
// Slow-start round end: exits slow start once more than gamma packets queue.
// Returns true when slow start ended this round.
bool slowStartRoundEnd(State& s, std::size_t r, double& cwnd, double& ssthresh, double gamma = 1.0);
void onLoss(State& s, std::size_t r);

}  // namespace wvegas

class WvegasController : public CongestionController {
 public:
  std::string_view name() const override { return "wvegas"; }
  void init(int r, TimeNs now) override;
  const wvegas::State& vegasState() const { return st_; }

 protected:
  void increase(int r, const AckInfo& info) override;
  double onLoss(int r, const AckInfo& info) override;
  void onTimeout(int r, TimeNs now) override;

 private:
  wvegas::State st_;
  std::vector<TimeNs> round_start_;
};

}  // namespace mpsim
