#include "mpsim/schedulers.hpp"

#include <algorithm>

#include "mpsim/error.hpp"

namespace mpsim {

namespace sched {

int fastest(const SchedView& v) {
  int best = -1;
  for (std::size_t i = 0; i < v.n; ++i) {
    const SubflowView& s = v.sf[i];
    if (!s.open || s.backup) continue;
    if (best < 0 || s.srtt < v.sf[best].srtt) best = static_cast<int>(i);
  }
  return best;
}

int minRtt(const SchedView& v) {
  int best = -1;
  for (std::size_t i = 0; i < v.n; ++i) {
    const SubflowView& s = v.sf[i];
    if (!s.available || s.backup) continue;
    if (best < 0 || s.srtt < v.sf[best].srtt) best = static_cast<int>(i);
  }
  return best;
}

SchedDecision blest(const SchedView& v, double lambda) {
  const int f = fastest(v);
  if (f >= 0 && v.sf[f].available) return {f, -1};
  const int s = minRtt(v);
  if (s < 0 || f < 0) return {};
  const SubflowView& fv = v.sf[f];
  const SubflowView& sv = v.sf[s];
  const double rtt_s = fv.srtt > 0 ? sv.srtt / fv.srtt : 1.0;
  const double cwnd_f = fv.cwnd / fv.smss;
  const double inflight_s = sv.inflight / sv.smss;
  const double x = fv.smss * (cwnd_f + (rtt_s - 1) / 2) * rtt_s;
  if (x * lambda <= v.send_window - sv.smss * (inflight_s + 1)) return {s, -1};
  return {};
}

EcfOut ecf(const SchedView& v, bool waiting, double beta) {
  const int f = fastest(v);
  if (f >= 0 && v.sf[f].available) return {{f, -1}, waiting};
  const int s = minRtt(v);
  if (s < 0 || f < 0) return {{}, waiting};
  const SubflowView& fv = v.sf[f];
  const SubflowView& sv = v.sf[s];
  const double k = v.remaining;
  const double n = 1 + k / fv.cwnd;
  const double delta = std::max(fv.rttvar, sv.rttvar);
  if (n * fv.srtt < (1 + (waiting ? 1.0 : 0.0) * beta) * (sv.srtt + delta)) {
    if (k / sv.cwnd * sv.srtt >= 2 * fv.srtt + delta) return {{}, true};
    return {{s, -1}, waiting};
  }
  return {{s, -1}, false};
}

RrOut roundRobin(const SchedView& v, std::size_t next, int num_segments) {
  if (v.n == 0) return {{}, 0};
  for (std::size_t k = 0; k < v.n; ++k) {
    const std::size_t i = (next + k) % v.n;
    const SubflowView& s = v.sf[i];
    if (s.open && s.cwnd - s.inflight >= num_segments * s.smss && s.available) return {{static_cast<int>(i), -1}, (i + 1) % v.n};
  }
  return {{}, next};
}

SchedDecision llhd(const SchedView& v, double beta) {
  double gp_max = 0, rtt_max = 0;
  for (std::size_t i = 0; i < v.n; ++i) {
    if (!v.sf[i].open) continue;
    gp_max = std::max(gp_max, v.sf[i].goodput);
    rtt_max = std::max(rtt_max, v.sf[i].srtt);
  }
  auto pass = [&](bool want_backup) {
    int best = -1;
    double gamma_max = 0;
    for (std::size_t i = 0; i < v.n; ++i) {
      const SubflowView& s = v.sf[i];
      if (!s.open || s.backup != want_backup) continue;
      const double gp_n = gp_max > 0 ? s.goodput / gp_max : 0.0;
      const double inv_rtt_n = (rtt_max > 0 && s.srtt > 0) ? rtt_max / s.srtt : 1.0;
      const double gamma = gp_n + beta * inv_rtt_n;
      if (s.available && gamma > gamma_max) {
        gamma_max = gamma;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  int best = pass(false);
  if (best < 0) best = pass(true);
  return {best, -1};
}

SchedDecision remp(const SchedView& v) {
  SchedDecision d;
  for (std::size_t i = 0; i < v.n; ++i) {
    if (!v.sf[i].available) continue;
    if (d.target < 0) {
      d.target = static_cast<int>(i);
    } else {
      d.duplicate_on = static_cast<int>(i);
      break;
    }
  }
  return d;
}

}  // namespace sched

namespace {

class MinRttScheduler : public Scheduler {
 public:
  std::string_view name() const override { return "minrtt"; }
  SchedDecision pick(const SchedView& v) override { return {sched::minRtt(v), -1}; }
  bool opportunisticRetransmit() const override { return true; }
};

class EcfScheduler : public Scheduler {
 public:
  explicit EcfScheduler(double beta) : beta_(beta) {}
  std::string_view name() const override { return "ecf"; }
  SchedDecision pick(const SchedView& v) override {
    const sched::EcfOut out = sched::ecf(v, waiting_, beta_);
    waiting_ = out.waiting;
    return out.decision;
  }

 private:
  double beta_;
  bool waiting_ = false;
};

class RrScheduler : public Scheduler {
 public:
  explicit RrScheduler(int num_segments) : num_segments_(num_segments) {}
  std::string_view name() const override { return "rr"; }
  SchedDecision pick(const SchedView& v) override {
    const sched::RrOut out = sched::roundRobin(v, next_, num_segments_);
    next_ = out.next;
    return out.decision;
  }

 private:
  int num_segments_;
  std::size_t next_ = 0;
};

class LlhdScheduler : public Scheduler {
 public:
  explicit LlhdScheduler(double beta) : beta_(beta) {}
  std::string_view name() const override { return "llhd"; }
  SchedDecision pick(const SchedView& v) override { return sched::llhd(v, beta_); }

 private:
  double beta_;
};

class RempScheduler : public Scheduler {
 public:
  std::string_view name() const override { return "remp"; }
  SchedDecision pick(const SchedView& v) override { return sched::remp(v); }
};

}  // namespace

void BlestScheduler::onWindowBlocked(TimeNs /*now*/) {
  lambda_ += step_;
  blocked_this_rtt_ = true;
}

void BlestScheduler::onTick(TimeNs now, TimeNs fast_srtt) {
  if (fast_srtt <= 0 || now - last_decay_ < fast_srtt) return;
  if (!blocked_this_rtt_) lambda_ = std::max(floor_, lambda_ * decay_);
  blocked_this_rtt_ = false;
  last_decay_ = now;
}

const std::vector<std::string>& schedulerNames() {
  static const std::vector<std::string> names{"minrtt", "blest", "ecf", "rr", "llhd"};
  return names;
}

const std::vector<std::string>& allSchedulerNames() {
  static const std::vector<std::string> names{"minrtt", "blest", "ecf", "rr", "llhd", "remp"};
  return names;
}

std::unique_ptr<Scheduler> makeScheduler(std::string_view name, const SchedulerOptions& opts) {
  if (name == "minrtt") return std::make_unique<MinRttScheduler>();
  if (name == "blest") return std::make_unique<BlestScheduler>(opts);
  if (name == "ecf") return std::make_unique<EcfScheduler>(opts.ecf_beta);
  if (name == "rr") return std::make_unique<RrScheduler>(opts.rr_num_segments);
  if (name == "llhd") return std::make_unique<LlhdScheduler>(opts.llhd_beta);
  if (name == "remp") return std::make_unique<RempScheduler>();
  throw RangeError("unknown scheduler '" + std::string(name) + "'");
}

}  // namespace mpsim
