#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mpsim/harness.hpp"
#include "oracle/oracle_checks.hpp"
#include "support/suites.hpp"

using namespace mpsim;

namespace {

// Tolerances.
constexpr double kOracleBudgetS = 60;
constexpr std::uint64_t kOracleMinCases = 10000;
constexpr double kRenoBudgetS = 1;
constexpr int kFuzzRuns = 200;
constexpr double kFuzzBudgetS = 300;
constexpr std::uint64_t kFuzzSeed = 20240611;
constexpr int kParallelJobs = 8;
constexpr double kHomSpread = 0.15;
constexpr double kHomWvegasRatio = 0.7;
constexpr double kIntBlestShareRatio = 0.5;
constexpr double kMixWvegasRatio = 0.6;
constexpr std::size_t kExpectedRuns = 5075;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool ok = true;
  std::vector<std::string> notes;
  void need(bool cond, std::string note) {
    ok = ok && cond;
    notes.push_back(fmt::format("  [{}] {}", cond ? "ok" : "FAIL", note));
  }
};

Outcome fromChecks(const std::vector<suites::Check>& checks) {
  Outcome o;
  for (const auto& c : checks)
    if (!c.ok) o.need(false, c.name + ": " + c.detail);
  return o;
}

Outcome oracleCriterion() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto reports = oracle::runAll();
  const double t = since(t0);
  for (const auto& r : reports)
    o.need(r.mismatches == 0 && r.cases >= kOracleMinCases,
           fmt::format("{}: {} cases, {} mismatches{}", r.name, r.cases, r.mismatches, r.first.empty() ? "" : " " + r.first));
  o.need(t < kOracleBudgetS, fmt::format("runtime {:.2f} s < {} s", t, kOracleBudgetS));
  return o;
}

Outcome renoCriterion() {
  const auto t0 = Clock::now();
  const auto checks = suites::renoSuite();
  const double t = since(t0);
  Outcome o = fromChecks(checks);
  o.need(true, fmt::format("{} checks", checks.size()));
  o.need(t < kRenoBudgetS, fmt::format("runtime {:.3f} s < {} s", t, kRenoBudgetS));
  return o;
}

Outcome fuzzCriterion() {
  const auto t0 = Clock::now();
  std::vector<suites::Check> checks;
  for (int i = 0; i < kFuzzRuns; ++i) checks.push_back(suites::fuzzOne(suites::fuzzCase(kFuzzSeed, i)));
  const double t = since(t0);
  Outcome o = fromChecks(checks);
  o.need(true, fmt::format("{} runs", checks.size()));
  o.need(t < kFuzzBudgetS, fmt::format("runtime {:.1f} s < {} s", t, kFuzzBudgetS));
  return o;
}

Outcome metricsCriterion() {
  const auto checks = suites::metricsSuite();
  Outcome o = fromChecks(checks);
  o.need(true, fmt::format("{} checks", checks.size()));
  return o;
}

Outcome cardinalityCriterion() {
  Outcome o;
  const RunMatrix m = defaultMatrix();
  o.need(m.size() == kExpectedRuns, fmt::format("matrix size {}", m.size()));
  o.need(expand(m).size() == kExpectedRuns, fmt::format("expanded runs {}", expand(m).size()));
  return o;
}

// ---------------------------------------------------------------- full matrix

struct Cell {
  double sf1 = 0, sf2 = 0, agg = 0, rtx = 0;
  int n = 0;
};

// Iteration averages keyed by scenario, scheduler, cca.
std::map<std::string, Cell> averages(const std::vector<RunRecord>& recs) {
  std::map<std::string, Cell> cells;
  for (const auto& r : recs) {
    Cell& c = cells[r.scenario + "/" + r.scheduler + "/" + r.cca];
    c.sf1 += r.sf1_gp;
    c.sf2 += r.sf2_gp;
    c.agg += r.agg_gp;
    c.rtx += static_cast<double>(r.sf1_rtx + r.sf2_rtx);
    ++c.n;
  }
  for (auto& [k, c] : cells) {
    c.sf1 /= c.n;
    c.sf2 /= c.n;
    c.agg /= c.n;
    c.rtx /= c.n;
  }
  return cells;
}

Outcome directionalCriterion(const std::vector<RunRecord>& recs) {
  Outcome o;
  const auto cells = averages(recs);
  auto cell = [&](const std::string& sc, const std::string& s, const std::string& c) -> const Cell& {
    const auto it = cells.find(sc + "/" + s + "/" + c);
    if (it == cells.end()) throw RangeError("no runs for " + sc + "/" + s + "/" + c);
    return it->second;
  };
  const auto& scheds = schedulerNames();

  {
    const std::string sc = "hom_bw_delay";
    double lo = 1e300, hi = 0;
    for (const auto& s : scheds) {
      lo = std::min(lo, cell(sc, s, "bbr").agg);
      hi = std::max(hi, cell(sc, s, "bbr").agg);
    }
    o.need(hi <= (1 + kHomSpread) * lo, fmt::format("{} bbr aggregate spread {:.2f}..{:.2f} Mibps within {:.0f}%", sc, lo, hi, 100 * kHomSpread));
    for (const auto& s : scheds) {
      const double w = cell(sc, s, "wvegas").agg, b = cell(sc, s, "bbr").agg;
      o.need(w < kHomWvegasRatio * b, fmt::format("{} {}: wvegas {:.2f} < {} x bbr {:.2f} (ratio {:.3f})", sc, s, w, kHomWvegasRatio, b, w / b));
    }
  }
  {
    const std::string sc = "int_het_loss_bw_delay";
    const Cell& bl = cell(sc, "blest", "bbr");
    const Cell& mr = cell(sc, "minrtt", "bbr");
    const double sb = bl.sf2 / bl.agg, sm = mr.sf2 / mr.agg;
    o.need(sb < kIntBlestShareRatio * sm,
           fmt::format("{} bbr: blest sf2 share {:.3f} < {} x minrtt sf2 share {:.3f}", sc, sb, kIntBlestShareRatio, sm));
    for (const auto& c : ccaNames()) {
      const double rr = cell(sc, "rr", c).rtx;
      std::string others;
      bool top = true;
      for (const auto& s : scheds) {
        if (s == "rr") continue;
        const double x = cell(sc, s, c).rtx;
        top = top && rr > x;
        others += fmt::format(" {} {:.1f}", s, x);
      }
      o.need(top, fmt::format("{} {}: rr retransmissions {:.1f} strictly highest (others:{})", sc, c, rr, others));
    }
  }
  {
    const std::string sc = "mix_het_delay_loss";
    for (const auto& s : scheds) {
      if (s == "rr") continue;
      const double w = cell(sc, s, "wvegas").agg, b = cell(sc, s, "bbr").agg;
      o.need(w < kMixWvegasRatio * b, fmt::format("{} {}: wvegas {:.2f} < {} x bbr {:.2f} (ratio {:.3f})", sc, s, w, kMixWvegasRatio, b, w / b));
    }
  }
  {
    const ScoreTable t = computeScores(recs);
    const auto rank = rankByOverall(t);
    std::string order;
    for (const auto& c : rank) {
      const auto it = t.cca.find(c);
      order += fmt::format(" {}={}", c, it != t.cca.end() && it->second.overall ? fmt::format("{:.4f}", *it->second.overall) : "NA");
    }
    const std::set<std::string> top(rank.begin(), rank.begin() + std::min<std::size_t>(3, rank.size()));
    o.need(top == std::set<std::string>{"bbr", "cmpbbr", "olia"}, "top three overall are bbr, cmpbbr, olia; ranking" + order);
  }
  return o;
}

struct FullMatrix {
  bool have = false;
  std::vector<RunRecord> serial;
};

Outcome determinismCriterion(FullMatrix& fm, const RunMatrix& m) {
  Outcome o;
  const auto t0 = Clock::now();
  fm.serial = executeSerial(m);
  fm.have = true;
  const double ts = since(t0);
  ExecOptions par;
  par.jobs = kParallelJobs;
  const auto t1 = Clock::now();
  const auto parallel = executeParallel(m, par);
  const double tp = since(t1);
  std::size_t failed = 0;
  for (const auto& r : fm.serial) failed += !r.ok;
  o.need(failed == 0, fmt::format("{} runs, {} failed", fm.serial.size(), failed));
  o.need(formatRunsCsv(fm.serial) == formatRunsCsv(parallel), fmt::format("runs.csv identical at jobs 1 ({:.0f} s) and jobs {} ({:.0f} s)", ts, kParallelJobs, tp));
  o.need(formatScoresCsv(computeScores(fm.serial)) == formatScoresCsv(computeScores(parallel)), "scores.csv identical");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> only;
  std::string from_runs;
  bool verbose = false;
  const std::vector<std::string> all = {"oracle", "reno", "fuzz", "determinism", "directional", "metrics", "cardinality"};
  app.add_option("--only", only, "Criteria to evaluate")->check(CLI::IsMember(all));
  app.add_option("--from-runs", from_runs, "Evaluate directional findings from an existing runs.csv")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", verbose, "Print the individual checks");
  CLI11_PARSE(app, argc, argv);
  if (only.empty()) only = all;
  auto wanted = [&](const std::string& n) { return std::find(only.begin(), only.end(), n) != only.end(); };

  const RunMatrix m = defaultMatrix();
  FullMatrix fm;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle", oracleCriterion},
      {"reno", renoCriterion},
      {"fuzz", fuzzCriterion},
      {"determinism", [&] { return determinismCriterion(fm, m); }},
      {"directional",
       [&] {
         if (!from_runs.empty()) return directionalCriterion(parseRunsCsv(readFile(from_runs)));
         if (!fm.have) {
           ExecOptions par;
           par.jobs = kParallelJobs;
           fm.serial = executeParallel(m, par);
           fm.have = true;
         }
         return directionalCriterion(fm.serial);
       }},
      {"metrics", metricsCriterion},
      {"cardinality", cardinalityCriterion},
  };

  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!wanted(name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.need(false, std::string("exception: ") + e.what());
    }
    for (const auto& n : o.notes)
      if (verbose || !o.ok) std::puts(n.c_str());
    std::printf("%s %s (%.1f s)\n", o.ok ? "PASS" : "FAIL", name.c_str(), since(t0));
    std::fflush(stdout);
    failures += !o.ok;
  }
  return failures == 0 ? 0 : 1;
}
