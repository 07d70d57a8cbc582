#pragma once

// Check suites shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mpsim/congestion.hpp"
#include "mpsim/error.hpp"
#include "mpsim/meta.hpp"
#include "mpsim/metrics.hpp"
#include "mpsim/reno.hpp"
#include "mpsim/schedulers.hpp"
#include "mpsim/simulation.hpp"
#include "mpsim/subflow.hpp"

namespace suites {

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};

inline bool relClose(double got, double want, double rel = 1e-9) {
  if (want == 0) return std::fabs(got) <= rel;
  return std::fabs(got - want) <= rel * std::fabs(want);
}

inline Check expectEq(std::string name, double got, double want, double rel = 1e-9) {
  return {std::move(name), relClose(got, want, rel), fmt::format("got {:.12g} want {:.12g}", got, want)};
}

template <typename E, typename F>
Check expectThrow(std::string name, F&& f) {
  try {
    f();
  } catch (const E&) {
    return {std::move(name), true, ""};
  } catch (const std::exception& e) {
    return {std::move(name), false, std::string("wrong exception: ") + e.what()};
  }
  return {std::move(name), false, "no exception"};
}

// ---------------------------------------------------------------- Reno

// One subflow under plain Reno, with segments of exactly one SMSS.
struct RenoRig {
  mpsim::Subflow sf;
  mpsim::RenoController cc;
  std::uint64_t next_dsn = 0;
  mpsim::TimeNs now = 0;

  explicit RenoRig(double smss = 1448) : sf(1, smss) { cc.bind({&sf.state()}, 0); }

  double smss() const { return sf.state().smss; }
  mpsim::SubflowState& st() { return sf.state(); }

  // Queues and transmits n segments; returns how many left.
  int send(int n) {
    const auto len = static_cast<std::uint32_t>(smss());
    for (int i = 0; i < n; ++i) {
      sf.queueData({next_dsn, len, mpsim::segmentChecksum(next_dsn, len)});
      next_dsn += len;
    }
    int sent = 0;
    while (sf.nextTransmission(now)) ++sent;
    return sent;
  }
  mpsim::AckInfo ack(std::uint64_t seq) {
    now += mpsim::milliseconds(1);
    return sf.onAck(now, seq, cc, 0);
  }
  mpsim::AckInfo dupAck() { return ack(st().snd_una); }
  std::uint64_t seg(int k) const { return static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(sf.state().smss); }
};

inline std::vector<Check> renoSuite() {
  using namespace mpsim;
  std::vector<Check> out;
  auto add = [&](Check c) { out.push_back(std::move(c)); };

  // Initial window bands.
  add(expectEq("iw smss=1460", reno::initialWindow(1460), 4380, 0));
  add(expectEq("iw smss=1000", reno::initialWindow(1000), 4000, 0));
  add(expectEq("iw smss=3000", reno::initialWindow(3000), 6000, 0));
  add(expectEq("iw band edge 1095", reno::initialWindow(1095), 4 * 1095, 0));
  add(expectEq("iw band edge 2190", reno::initialWindow(2190), 3 * 2190, 0));
  add(expectEq("iw band edge 2191", reno::initialWindow(2191), 2 * 2191, 0));
  {
    RenoRig r(1460);
    add(expectEq("subflow starts at iw", r.st().cwnd, 4380, 0));
  }

  // Usable window.
  const double S = 1448;
  add(expectEq("allowed 10/8/3", reno::allowedSend(10 * S, 8 * S, 3 * S), 5 * S, 0));
  add(expectEq("allowed flight at min", reno::allowedSend(10 * S, 8 * S, 8 * S), 0, 0));
  add(expectEq("allowed flight above min", reno::allowedSend(10 * S, 8 * S, 9 * S), 0, 0));
  add(expectEq("allowed rwnd 0", reno::allowedSend(100 * S, 0, 0), 0, 0));

  // Slow start and congestion avoidance through the ACK path.
  {
    RenoRig r;
    r.st().cwnd = 2 * S;
    r.send(2);
    r.ack(r.seg(1));
    add(expectEq("slow start full-segment ack", r.st().cwnd, 3 * S, 0));
  }
  add(expectEq("slow start partial ack", reno::ackCwnd(2 * S, 1e12, 500, S), 2 * S + 500, 0));
  {
    RenoRig r;
    r.st().cwnd = 10 * S;
    r.st().ssthresh = 5 * S;
    r.send(10);
    r.ack(r.seg(1));
    add(expectEq("avoidance one ack", r.st().cwnd, 10 * S + S / 10, 1e-12));
  }
  {
    RenoRig r;
    r.st().cwnd = 10 * S;
    r.st().ssthresh = 5 * S;
    r.send(10);
    double want = 10 * S;
    for (int k = 1; k <= 10; ++k) {
      r.ack(r.seg(k));
      want += S * S / want;
    }
    add(expectEq("avoidance ten acks", r.st().cwnd, want, 1e-12));
    const double gain = (r.st().cwnd - 10 * S) / S;
    add({"avoidance ten acks near one smss", gain > 0.95 && gain <= 1.0, fmt::format("gain {:.4f} smss", gain)});
  }

  // Three duplicate ACKs and fast recovery.
  {
    RenoRig r;
    r.st().cwnd = 10 * S;
    const int sent = r.send(10);
    add({"flight of ten", sent == 10 && r.st().flight_size == r.seg(10), fmt::format("sent {}", sent)});
    const AckInfo d1 = r.dupAck();
    const AckInfo d2 = r.dupAck();
    add({"two dupacks leave window", d1.kind == AckKind::DupAck && d2.kind == AckKind::DupAck && r.st().cwnd == 10 * S,
         ""});
    const AckInfo d3 = r.dupAck();
    add({"third dupack enters recovery", d3.kind == AckKind::EnterRecovery && r.st().in_fast_recovery, ""});
    add(expectEq("third dupack ssthresh", r.st().ssthresh, 5 * S, 0));
    add(expectEq("third dupack cwnd", r.st().cwnd, 8 * S, 0));
    const auto rtx = r.sf.nextTransmission(r.now);
    add({"fast retransmit of head", rtx && rtx->retransmission && rtx->subflow_seq == 0, ""});
    r.dupAck();
    add(expectEq("fourth dupack inflates", r.st().cwnd, 9 * S, 0));
    r.dupAck();
    add(expectEq("fifth dupack inflates", r.st().cwnd, 10 * S, 0));
    const AckInfo done = r.ack(r.st().recover);
    add({"ack past recover exits", done.kind == AckKind::RecoveryExit && !r.st().in_fast_recovery, ""});
    add(expectEq("recovery exit deflates", r.st().cwnd, 5 * S, 0));
  }
  {
    RenoRig r;
    r.st().cwnd = 4 * S;
    r.send(4);
    for (int i = 0; i < 3; ++i) r.dupAck();
    add(expectEq("small flight ssthresh floor", r.st().ssthresh, 2 * S, 0));
    add(expectEq("small flight recovery cwnd", r.st().cwnd, 5 * S, 0));
  }

  // Retransmission timeout.
  {
    RenoRig r;
    r.st().cwnd = 10 * S;
    r.send(10);
    const TimeNs rto0 = r.st().rto;
    const auto head = r.sf.onRto(r.now, r.cc, 0);
    add(expectEq("rto ssthresh", r.st().ssthresh, 5 * S, 0));
    add(expectEq("rto cwnd", r.st().cwnd, S, 0));
    add({"rto doubles timer", r.st().rto == 2 * rto0, fmt::format("{} -> {}", rto0, r.st().rto)});
    add({"rto hands head to meta", head && head->dsn == 0, ""});
    const auto again = r.sf.nextTransmission(r.now);
    add({"rto retransmits head", again && again->retransmission && again->subflow_seq == 0, ""});
    r.st().ssthresh = 7 * S;
    r.sf.onRto(r.now, r.cc, 0);
    add(expectEq("second rto keeps ssthresh", r.st().ssthresh, 7 * S, 0));
    add(expectEq("second rto cwnd", r.st().cwnd, S, 0));
    for (int i = 0; i < 10; ++i) r.sf.onRto(r.now, r.cc, 0);
    add({"rto capped", r.st().rto == kRtoCeiling, fmt::format("{}", r.st().rto)});
  }
  {
    RenoRig r;
    r.st().cwnd = 2 * S;
    r.send(2);
    r.sf.onRto(r.now, r.cc, 0);
    add(expectEq("rto small flight floor", r.st().ssthresh, 2 * S, 0));
  }

  // RTT estimator against the textbook recurrences in doubles.
  {
    SubflowState st;
    updateRttEstimator(st, milliseconds(100));
    add({"first rtt sample", st.srtt == milliseconds(100) && st.rttvar == milliseconds(50) && st.rto == milliseconds(300),
         ""});
    double srtt = 100e6, var = 50e6;
    std::mt19937_64 g(7);
    std::uniform_int_distribution<std::int64_t> d(milliseconds(20), milliseconds(180));
    bool ok = true;
    for (int i = 0; i < 200; ++i) {
      const TimeNs s = d(g);
      updateRttEstimator(st, s);
      var = 0.75 * var + 0.25 * std::fabs(srtt - static_cast<double>(s));
      srtt = 0.875 * srtt + 0.125 * static_cast<double>(s);
      if (std::fabs(static_cast<double>(st.srtt) - srtt) > 10 || std::fabs(static_cast<double>(st.rttvar) - var) > 10)
        ok = false;
    }
    add({"rtt estimator recurrences", ok, ""});
    SubflowState c;
    for (int i = 0; i < 100; ++i) updateRttEstimator(c, milliseconds(40));
    add({"srtt converges on constant samples", c.srtt == milliseconds(40) && c.rto == kRtoFloor,
         fmt::format("srtt {} rto {}", c.srtt, c.rto)});
  }

  // Stale ACK.
  {
    RenoRig r;
    r.send(3);
    r.ack(r.seg(2));
    const AckInfo s = r.ack(r.seg(1));
    add({"stale ack counted", s.kind == AckKind::Stale && r.st().stale_acks == 1, ""});
  }
  return out;
}

// ---------------------------------------------------------------- Metrics

inline std::vector<Check> metricsSuite(std::uint64_t seed = 99) {
  using namespace mpsim;
  std::vector<Check> out;
  auto add = [&](Check c) { out.push_back(std::move(c)); };

  add(expectEq("goodput 393216000 B / 30 s", goodputMbps(393216000, 30), 100.0));
  add(expectEq("goodput zero", goodputMbps(0, 30), 0.0));
  add(expectEq("goodput 131072 B / 1 s", goodputMbps(131072, 1), 1.0));

  add(expectEq("pps 1514*30000", packetsPerSecond(1514.0 * 30000), 1000.0));
  add(expectEq("ppd 1514*30000", perPacketDelayMs(1514.0 * 30000), 1.0));
  add(expectEq("ppd 1514*30", perPacketDelayMs(1514.0 * 30), 1000.0));
  add(expectEq("ppd halves when bytes double", perPacketDelayMs(2 * 777777.0), perPacketDelayMs(777777.0) / 2));
  add(expectThrow<ZeroBytes>("ppd zero bytes", [] { perPacketDelayMs(0); }));

  add(expectEq("ps {100,100}", psScore({100, 100}, 2), 0.5));
  add(expectEq("ps zeros", psScore({0, 0, 0}, 3), 0.0));
  add(expectEq("ps all 200", psScore({200, 200, 200, 200}, 4), 1.0));
  add(expectThrow<SizeMismatch>("ps size mismatch", [] { psScore({1, 2}, 3); }));

  {
    std::map<std::string, std::map<std::string, double>> ps{{"a", {{"f", 0.4}}}, {"b", {{"f", 0.6}}}};
    const CcaScore s = ccaScores(ps, {"a", "b"}, {"f"});
    add(expectEq("family mean over schedulers", s.per_family.at("f"), 0.5));
  }
  {
    std::map<std::string, std::map<std::string, double>> ps{{"a", {{"f", 0.3}, {"g", 0.3}}}};
    const CcaScore s = ccaScores(ps, {"a"}, {"f", "g"});
    add({"equal families leave overall absent", s.cv == 0 && !s.overall, ""});
  }
  {
    std::map<std::string, std::map<std::string, double>> ps{{"a", {{"f", 0.4}, {"g", 0.6}}}};
    const CcaScore s = ccaScores(ps, {"a"}, {"f", "g"});
    add(expectEq("cca score mean", s.score, 0.5));
    add(expectEq("cca cv", s.cv, 0.2));
    add({"cca overall", s.overall && relClose(*s.overall, 2.5), s.overall ? fmt::format("{}", *s.overall) : "absent"});
  }
  add(expectThrow<IncompleteGrid>("incomplete grid", [] {
    std::map<std::string, std::map<std::string, double>> ps{{"a", {{"f", 0.4}}}};
    ccaScores(ps, {"a"}, {"f", "g"});
  }));

  auto at = [](const std::vector<std::pair<double, double>>& series, double x) {
    for (const auto& [v, p] : series)
      if (v == x) return p;
    return -1.0;
  };
  add(expectEq("ecdf {1,2,3} at 2", at(ecdf({1, 2, 3}), 2), 2.0 / 3.0));
  add(expectEq("eccdf at min", at(eccdf({3, 1, 2}), 1), 1.0));
  add(expectThrow<EmptyInput>("ecdf empty", [] { ecdf({}); }));
  add(expectThrow<EmptyInput>("eccdf empty", [] { eccdf({}); }));

  // Complementarity against brute-force counting.
  std::mt19937_64 g(seed);
  int bad = 0;
  std::string first;
  for (int set = 0; set < 100; ++set) {
    const int n = std::uniform_int_distribution<int>(1, 60)(g);
    std::vector<double> v(n);
    // Small integer support so ties are common.
    for (double& x : v) x = std::uniform_int_distribution<int>(0, 15)(g) * 0.5;
    const auto lo = ecdf(v);
    const auto hi = eccdf(v);
    for (double x : v) {
      double le = 0, ge = 0, eq = 0;
      for (double y : v) {
        le += y <= x;
        ge += y >= x;
        eq += y == x;
      }
      const double pl = at(lo, x), ph = at(hi, x);
      if (!relClose(pl, le / n) || !relClose(ph, ge / n) || !relClose(pl + ph, 1 + eq / n)) {
        if (bad++ == 0) first = fmt::format("set {} x {}: {} + {}", set, x, pl, ph);
      }
    }
  }
  add({"ecdf/eccdf complementarity on 100 sets", bad == 0, first});
  return out;
}

// ---------------------------------------------------------------- Exactly-once fuzz

struct FuzzCase {
  mpsim::RunConfig cfg;
  std::string label;
};

inline FuzzCase fuzzCase(std::uint64_t seed, int index) {
  using namespace mpsim;
  std::mt19937_64 g(mixSeed(seed, static_cast<std::uint64_t>(index)));
  auto pick = [&](const std::vector<std::string>& names) {
    return names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(g)];
  };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); };
  FuzzCase c;
  // Cycle the grid first so every pairing appears, then sample.
  const auto& scheds = allSchedulerNames();
  const auto& ccas = ccaNames();
  const std::size_t cells = scheds.size() * ccas.size();
  if (static_cast<std::size_t>(index) < cells) {
    c.cfg.scheduler = scheds[static_cast<std::size_t>(index) % scheds.size()];
    c.cfg.cca = ccas[static_cast<std::size_t>(index) / scheds.size()];
  } else {
    c.cfg.scheduler = pick(scheds);
    c.cfg.cca = pick(ccas);
  }
  c.cfg.sf1 = makePath(real(5, 100), real(0, 50), real(0, 2));
  c.cfg.sf2 = makePath(real(5, 100), real(0, 50), real(0, 2));
  c.cfg.l3 = defaultBottleneck();
  c.cfg.seed = g();
  c.cfg.source_bytes = static_cast<std::uint64_t>(real(0.5, 4.0) * 1024 * 1024) + std::uniform_int_distribution<int>(0, 1447)(g);
  c.cfg.duration = seconds(120);
  c.cfg.check_invariants = true;
  c.label = fmt::format("#{} {}+{} {:.0f}/{:.1f}ms/{:.2f}% {:.0f}/{:.1f}ms/{:.2f}% {} B", index, c.cfg.scheduler,
                        c.cfg.cca, c.cfg.sf1.rate_bps / 1e6, 2 * c.cfg.sf1.one_way_delay / 1e6, 100 * c.cfg.sf1.loss_rate,
                        c.cfg.sf2.rate_bps / 1e6, 2 * c.cfg.sf2.one_way_delay / 1e6, 100 * c.cfg.sf2.loss_rate,
                        c.cfg.source_bytes);
  return c;
}

inline Check fuzzOne(const FuzzCase& c) {
  using namespace mpsim;
  const RunResult r = simulate(c.cfg);
  const std::uint64_t want = expectedDigest(c.cfg.source_bytes, kPayloadMss);
  std::string why;
  if (r.delivered_bytes != c.cfg.source_bytes)
    why += fmt::format(" delivered {} of {}", r.delivered_bytes, c.cfg.source_bytes);
  if (r.sink_digest != want) why += " sink digest";
  if (r.source_digest != want) why += " source digest";
  if (r.checksum_errors) why += fmt::format(" checksum errors {}", r.checksum_errors);
  if (r.invariant_violations) why += fmt::format(" invariant violations {}", r.invariant_violations);
  if (r.window_overruns) why += fmt::format(" window overruns {}", r.window_overruns);
  return {c.label, why.empty(), why};
}

}  // namespace suites
