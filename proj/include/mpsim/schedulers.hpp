#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mpsim/time.hpp"

namespace mpsim {

constexpr std::size_t kMaxSubflows = 8;

struct SubflowView {
  int id = 0;
  double srtt = 0;    // seconds
  double rttvar = 0;  // seconds
  double cwnd = 0;    // bytes
  double inflight = 0;
  double smss = 1448;
  bool available = false;
  bool backup = false;
  bool open = true;
  double goodput = 0;  // bytes per second over the last second
};

// Snapshot handed to a scheduler; slots are ordered by subflow id.
struct SchedView {
  std::array<SubflowView, kMaxSubflows> sf{};
  std::size_t n = 0;
  double send_window = 0;  // advertised connection window, bytes
  double remaining = 0;    // unsent bytes in the send buffer
};

struct SchedDecision {
  int target = -1;
  int duplicate_on = -1;
  bool none() const { return target < 0; }
};

namespace sched {

// Lowest-srtt open non-backup subflow regardless of window space.
int fastest(const SchedView& v);
int minRtt(const SchedView& v);
SchedDecision blest(const SchedView& v, double lambda);

struct EcfOut {
  SchedDecision decision;
  bool waiting = false;
};
EcfOut ecf(const SchedView& v, bool waiting, double beta);

struct RrOut {
  SchedDecision decision;
  std::size_t next = 0;
};
RrOut roundRobin(const SchedView& v, std::size_t next, int num_segments);

SchedDecision llhd(const SchedView& v, double beta);
SchedDecision remp(const SchedView& v);

}  // namespace sched

struct SchedulerOptions {
  double ecf_beta = 0.25;
  double llhd_beta = 0.001;
  double blest_lambda = 1.0;
  double blest_lambda_step = 0.125;
  double blest_lambda_decay = 0.99;
  int rr_num_segments = 1;
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string_view name() const = 0;
  virtual SchedDecision pick(const SchedView& v) = 0;
  // The connection window stopped a grant that a subflow could have taken.
  virtual void onWindowBlocked(TimeNs /*now*/) {}
  // Called on every sampling tick with the fastest subflow's srtt.
  virtual void onTick(TimeNs /*now*/, TimeNs /*fast_srtt*/) {}
  // Reinject the head-of-line segment and penalize its carrier when blocked.
  virtual bool opportunisticRetransmit() const { return false; }
};

const std::vector<std::string>& schedulerNames();
const std::vector<std::string>& allSchedulerNames();
// Throws RangeError for unknown names.
std::unique_ptr<Scheduler> makeScheduler(std::string_view name, const SchedulerOptions& opts = {});

class BlestScheduler : public Scheduler {
 public:
  explicit BlestScheduler(const SchedulerOptions& o) : lambda_(o.blest_lambda), floor_(o.blest_lambda), step_(o.blest_lambda_step), decay_(o.blest_lambda_decay) {}
  std::string_view name() const override { return "blest"; }
  SchedDecision pick(const SchedView& v) override { return sched::blest(v, lambda_); }
  void onWindowBlocked(TimeNs now) override;
  void onTick(TimeNs now, TimeNs fast_srtt) override;
  double lambda() const { return lambda_; }

 private:
  double lambda_;
  double floor_;
  double step_;
  double decay_;
  bool blocked_this_rtt_ = false;
  TimeNs last_decay_ = 0;
};

}  // namespace mpsim
