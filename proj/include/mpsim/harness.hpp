#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpsim/metrics.hpp"
#include "mpsim/path.hpp"

namespace mpsim {

// Link figures as written in scenario tables.
struct LinkSpec {
  double rate_mbps = 100;
  double rtt_ms = 0;
  double loss_pct = 0;

  PathConfig toPath() const { return makePath(rate_mbps, rtt_ms, loss_pct); }
  bool operator==(const LinkSpec&) const = default;
};

struct Scenario {
  std::string id;
  std::string family;
  LinkSpec sf1;
  LinkSpec sf2;
  LinkSpec l3{2000, 0, 0};

  bool operator==(const Scenario&) const = default;
};

const std::vector<std::string>& familyNames();

struct RunMatrix {
  std::uint64_t master_seed = 42;
  double duration_s = 30;
  int iterations = 5;
  std::vector<Scenario> scenarios;
  std::vector<std::string> schedulers;
  std::vector<std::string> ccas;

  std::size_t size() const { return scenarios.size() * schedulers.size() * ccas.size() * static_cast<std::size_t>(iterations); }
  bool operator==(const RunMatrix&) const = default;
};

// 29 scenarios, 5 schedulers, 7 CCAs, 5 iterations.
RunMatrix defaultMatrix();

// YAML text; missing keys keep the default matrix values. Throws ParseError or RangeError.
RunMatrix parseMatrix(const std::string& text);
// Throws IoError when the file cannot be read.
RunMatrix loadMatrix(const std::filesystem::path& path);
std::string dumpMatrix(const RunMatrix& m);

// Narrows an axis to the named entries; empty keeps the axis. Throws RangeError on unknown names.
void restrictMatrix(RunMatrix& m, const std::vector<std::string>& scenarios, const std::vector<std::string>& schedulers,
                    const std::vector<std::string>& ccas);

std::uint64_t runSeed(std::uint64_t master, const std::string& scenario, const std::string& scheduler,
                      const std::string& cca, int iteration);

struct RunSpec {
  std::size_t index = 0;
  std::size_t scenario = 0;
  std::string scheduler;
  std::string cca;
  int iteration = 0;
  std::uint64_t seed = 0;
};

// Canonical order: scenario, scheduler, cca, iteration.
std::vector<RunSpec> expand(const RunMatrix& m);

struct RunRecord {
  std::string scenario;
  std::string family;
  std::string scheduler;
  std::string cca;
  int iteration = 0;
  double sf1_gp = 0;
  double sf2_gp = 0;
  double agg_gp = 0;
  std::uint64_t sf1_rtx = 0;
  std::uint64_t sf2_rtx = 0;
  std::optional<double> avg_ppd_ms;
  bool ok = true;
  std::string error;
  std::string trace;
};

// <scenario>_<scheduler>_<cca>_<iteration>
std::string runId(const RunRecord& r);

struct ExecOptions {
  int jobs = 1;
  bool traces = false;
  // Called after each run completes, from the worker thread that ran it.
  std::function<void(const RunRecord&)> progress;
};

RunRecord executeOne(const RunMatrix& m, const RunSpec& spec, bool trace = false);
// Reference path: runs in canonical order on the calling thread.
std::vector<RunRecord> executeSerial(const RunMatrix& m, const ExecOptions& opts = {});
// OpenMP fan-out; results land in canonical order regardless of jobs.
std::vector<RunRecord> executeParallel(const RunMatrix& m, const ExecOptions& opts);
std::vector<RunRecord> execute(const RunMatrix& m, const ExecOptions& opts);

// runs.csv with the fixed column order. Failed runs are skipped.
std::string formatRunsCsv(const std::vector<RunRecord>& records);
// Throws ParseError on a malformed header or row.
std::vector<RunRecord> parseRunsCsv(const std::string& text);

struct ScoreTable {
  std::vector<std::string> schedulers;
  std::vector<std::string> families;
  std::vector<std::string> ccas;
  // ps[cca][scheduler][family]
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> ps;
  std::map<std::string, CcaScore> cca;
};

// Axis order follows first appearance in the records. CCAs with an incomplete grid are left out of `cca`.
ScoreTable computeScores(const std::vector<RunRecord>& records, Deviation dev = Deviation::Population);
std::string formatScoresCsv(const ScoreTable& t);
// Highest overall score first; CCAs without one go last.
std::vector<std::string> rankByOverall(const ScoreTable& t);

// Iteration-averaged per-scenario series for every (cca, scheduler) pair.
std::string formatEccdfCsv(const std::vector<RunRecord>& records);
std::string formatEcdfCsv(const std::vector<RunRecord>& records);

// Writes runs.csv, scores.csv, eccdf.csv, ecdf.csv and traces/ into dir. Throws IoError.
void emitResults(const std::vector<RunRecord>& records, const std::filesystem::path& dir);

std::string readFile(const std::filesystem::path& path);
void writeFile(const std::filesystem::path& path, const std::string& text);

}  // namespace mpsim
