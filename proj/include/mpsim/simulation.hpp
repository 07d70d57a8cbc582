#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mpsim/congestion.hpp"
#include "mpsim/meta.hpp"
#include "mpsim/path.hpp"
#include "mpsim/schedulers.hpp"

namespace mpsim {

constexpr TimeNs kSampleInterval = 500 * kNsPerUs;

struct RunConfig {
  PathConfig sf1;
  PathConfig sf2;
  PathConfig l3;
  TimeNs duration = 30 * kNsPerSec;
  std::string scheduler = "minrtt";
  std::string cca = "cubic";
  std::uint64_t seed = 42;
  SchedulerOptions sched_opts;
  bool limited_transmit = false;
  bool record_trace = false;
  bool record_series = false;
  // Verifies on every sampling tick that each undelivered DSN byte is still held somewhere.
  bool check_invariants = false;
  // Finite sources stop the run once everything is delivered.
  std::uint64_t source_bytes = UINT64_MAX;
};

// Standard router-to-receiver link: 2 Gbps, no delay, no loss.
PathConfig defaultBottleneck();

struct SubflowResult {
  double goodput_mbps = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t retransmissions = 0;
  // Retransmissions recounted from the segment ledger.
  std::uint64_t ledger_retransmissions = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t link_drops = 0;
  double mean_srtt_ms = 0;
  double final_cwnd = 0;
  bool closed = false;
  std::vector<std::pair<TimeNs, TimeNs>> srtt_series;
};

struct RunResult {
  std::array<SubflowResult, 2> sf;
  std::uint64_t delivered_bytes = 0;
  double agg_goodput_mbps = 0;
  double avg_ppd_ms = 0;
  OfoStats ofo;
  std::vector<OfoSample> ofo_series;
  std::uint64_t events = 0;
  std::uint64_t trace_hash = 0;
  std::uint64_t duplicate_bytes = 0;
  std::uint64_t checksum_errors = 0;
  std::uint64_t sink_digest = 0;
  std::uint64_t source_digest = 0;
  std::uint64_t max_receive_memory = 0;
  std::uint64_t window_overruns = 0;
  std::uint64_t invariant_violations = 0;
  TimeNs finished_at = 0;
  std::string trace;
};

// Single-threaded; everything is derived from the config and its seed.
RunResult simulate(const RunConfig& cfg);

}  // namespace mpsim
