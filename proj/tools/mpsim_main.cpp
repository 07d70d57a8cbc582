#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mpsim/error.hpp"
#include "mpsim/harness.hpp"

namespace {

struct Args {
  std::string config;
  std::string out = "results";
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> scenarios;
  std::vector<std::string> schedulers;
  std::vector<std::string> ccas;
  std::optional<int> iterations;
  std::optional<double> duration;
  bool traces = false;
  bool quiet = false;
  std::string runs_csv;
  bool sample_dev = false;
};

mpsim::RunMatrix buildMatrix(const Args& a) {
  mpsim::RunMatrix m = a.config.empty() ? mpsim::defaultMatrix() : mpsim::loadMatrix(a.config);
  mpsim::restrictMatrix(m, a.scenarios, a.schedulers, a.ccas);
  if (a.seed) m.master_seed = *a.seed;
  if (a.iterations) {
    if (*a.iterations < 1) throw mpsim::RangeError("iterations must be at least 1");
    m.iterations = *a.iterations;
  }
  if (a.duration) {
    if (!(*a.duration > 0)) throw mpsim::RangeError("duration must be positive");
    m.duration_s = *a.duration;
  }
  return m;
}

int cmdRun(const Args& a) {
  const mpsim::RunMatrix m = buildMatrix(a);
  const std::size_t total = m.size();
  std::atomic<std::size_t> done{0};
  mpsim::ExecOptions opts;
  opts.jobs = a.jobs;
  opts.traces = a.traces;
  opts.progress = [&](const mpsim::RunRecord& r) {
    const std::size_t n = ++done;
    if (!r.ok)
      std::fprintf(stderr, "run %s failed: %s\n", mpsim::runId(r).c_str(), r.error.c_str());
    else if (!a.quiet)
      std::fprintf(stderr, "[%zu/%zu] %s %.2f Mbps\n", n, total, mpsim::runId(r).c_str(), r.agg_gp);
  };
  const std::vector<mpsim::RunRecord> records = mpsim::execute(m, opts);
  mpsim::emitResults(records, a.out);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok ? 0 : 1;
  std::printf("%zu runs, %zu failed, results in %s\n", records.size(), failed, a.out.c_str());
  return failed == 0 ? 0 : 1;
}

int cmdList(const Args& a) {
  const mpsim::RunMatrix m = buildMatrix(a);
  std::fputs(mpsim::dumpMatrix(m).c_str(), stdout);
  std::printf("# %zu runs\n", m.size());
  return 0;
}

int cmdScore(const Args& a) {
  const auto records = mpsim::parseRunsCsv(mpsim::readFile(a.runs_csv));
  const auto table =
      mpsim::computeScores(records, a.sample_dev ? mpsim::Deviation::Sample : mpsim::Deviation::Population);
  const std::string scores = mpsim::formatScoresCsv(table);
  if (a.out.empty())
    std::fputs(scores.c_str(), stdout);
  else
    mpsim::writeFile(a.out, scores);
  int rank = 1;
  for (const std::string& cca : mpsim::rankByOverall(table)) {
    const auto& s = table.cca.at(cca);
    std::fprintf(stderr, "%d. %-8s score %.4f cv %.4f overall %s\n", rank++, cca.c_str(), s.score, s.cv,
                 s.overall ? fmt::format("{:.4f}", *s.overall).c_str() : "NA");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-subflow multipath transport simulator"};
  app.require_subcommand(1);
  Args a;

  auto addMatrixFlags = [&](CLI::App* sub) {
    sub->add_option("--config", a.config, "YAML matrix file")->check(CLI::ExistingFile);
    sub->add_option("--seed", a.seed, "Master seed");
    sub->add_option("--scenario", a.scenarios, "Restrict to scenario ids")->delimiter(',');
    sub->add_option("--scheduler", a.schedulers, "Restrict to schedulers")->delimiter(',');
    sub->add_option("--cca", a.ccas, "Restrict to congestion controllers")->delimiter(',');
    sub->add_option("--iterations", a.iterations, "Iterations per cell");
    sub->add_option("--duration", a.duration, "Seconds per run");
  };

  CLI::App* run = app.add_subcommand("run", "Execute the matrix and write CSVs");
  addMatrixFlags(run);
  run->add_option("--out", a.out, "Output directory");
  run->add_option("--jobs", a.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  run->add_flag("--traces", a.traces, "Write traces/<run-id>.log");
  run->add_flag("--quiet", a.quiet, "No per-run progress");

  CLI::App* list = app.add_subcommand("list", "Print the matrix");
  addMatrixFlags(list);

  CLI::App* score = app.add_subcommand("score", "Recompute scores.csv from runs.csv");
  score->add_option("runs", a.runs_csv, "runs.csv")->required()->check(CLI::ExistingFile);
  score->add_option("--out", a.out, "Write scores here instead of stdout");
  score->add_flag("--sample-deviation", a.sample_dev, "Use sample deviation for CV");

  CLI11_PARSE(app, argc, argv);
  if (score->parsed() && score->count("--out") == 0) a.out.clear();
  try {
    if (run->parsed()) return cmdRun(a);
    if (list->parsed()) return cmdList(a);
    return cmdScore(a);
  } catch (const mpsim::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
