#include "mpsim/harness.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mpsim/congestion.hpp"
#include "mpsim/error.hpp"
#include "mpsim/rng.hpp"
#include "mpsim/schedulers.hpp"
#include "mpsim/simulation.hpp"

namespace mpsim {

const std::vector<std::string>& familyNames() {
  static const std::vector<std::string> names{"homogeneous", "mild", "intense", "very_intense", "mixed"};
  return names;
}

namespace {

// One family of degraded SF2 variants against a static SF1: each axis alone, each pair, all three.
void addDegradedFamily(std::vector<Scenario>& out, const std::string& family, const std::string& prefix,
                       const LinkSpec& sf1, double rate, double rtt, double loss) {
  struct Variant {
    const char* suffix;
    bool bw, delay, lossy;
  };
  static const Variant variants[] = {
      {"bw", true, false, false},         {"delay", false, true, false},     {"loss", false, false, true},
      {"bw_delay", true, true, false},    {"loss_bw", true, false, true},    {"loss_delay", false, true, true},
      {"loss_bw_delay", true, true, true},
  };
  for (const Variant& v : variants) {
    Scenario s;
    s.id = prefix + v.suffix;
    s.family = family;
    s.sf1 = sf1;
    s.sf2 = sf1;
    if (v.bw) s.sf2.rate_mbps = rate;
    if (v.delay) s.sf2.rtt_ms = rtt;
    if (v.lossy) s.sf2.loss_pct = loss;
    out.push_back(s);
  }
}

std::vector<Scenario> defaultScenarios() {
  std::vector<Scenario> out;
  auto add = [&](const char* id, const char* family, LinkSpec a, LinkSpec b) {
    Scenario s;
    s.id = id;
    s.family = family;
    s.sf1 = a;
    s.sf2 = b;
    out.push_back(s);
  };
  add("hom_bw", "homogeneous", {100, 0, 0}, {100, 0, 0});
  add("hom_bw_delay", "homogeneous", {100, 5, 0}, {100, 5, 0});
  add("hom_bw_delay10", "homogeneous", {100, 10, 0}, {100, 10, 0});
  add("hom_loss_bw_delay", "homogeneous", {100, 5, 1}, {100, 5, 1});

  const LinkSpec base{100, 0, 0};
  addDegradedFamily(out, "mild", "mild_het_", base, 75, 5, 0.05);
  addDegradedFamily(out, "intense", "int_het_", base, 50, 20, 0.5);
  addDegradedFamily(out, "very_intense", "vint_het_", base, 5, 50, 2);

  add("mix_het_delay_loss", "mixed", {100, 10, 0}, {100, 2, 0.5});
  add("mix_het_loss_bw", "mixed", {100, 0, 1}, {50, 2, 0});
  add("mix_het_delay_bw_loss", "mixed", {100, 10, 0}, {75, 0, 0.05});
  add("mix_het_all", "mixed", {100, 5, 2}, {5, 0, 0});
  return out;
}

void checkLink(const LinkSpec& l) { (void)l.toPath(); }

void checkMatrix(const RunMatrix& m) {
  if (m.iterations < 1) throw RangeError("iterations must be at least 1");
  if (!(m.duration_s > 0)) throw RangeError("duration must be positive");
  std::set<std::string> ids;
  for (const Scenario& s : m.scenarios) {
    if (s.id.empty()) throw RangeError("scenario id must not be empty");
    if (!ids.insert(s.id).second) throw RangeError("duplicate scenario id " + s.id);
    if (std::find(familyNames().begin(), familyNames().end(), s.family) == familyNames().end())
      throw RangeError("unknown family " + s.family);
    checkLink(s.sf1);
    checkLink(s.sf2);
    checkLink(s.l3);
  }
  const auto& scheds = allSchedulerNames();
  for (const std::string& s : m.schedulers)
    if (std::find(scheds.begin(), scheds.end(), s) == scheds.end()) throw RangeError("unknown scheduler " + s);
  const auto& ccas = ccaNames();
  for (const std::string& c : m.ccas)
    if (std::find(ccas.begin(), ccas.end(), c) == ccas.end()) throw RangeError("unknown cca " + c);
}

int lineOf(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

template <typename T>
T scalar(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw ParseError("expected a scalar", lineOf(n), field);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError("bad value '" + n.Scalar() + "'", lineOf(n), field);
  }
}

std::vector<std::string> stringList(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) throw ParseError("expected a list", lineOf(n), field);
  std::vector<std::string> out;
  for (const YAML::Node& item : n) out.push_back(scalar<std::string>(item, field));
  return out;
}

void rejectUnknown(const YAML::Node& map, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ParseError("unknown key", lineOf(kv.first), where.empty() ? key : where + "." + key);
  }
}

LinkSpec parseLink(const YAML::Node& n, const std::string& field) {
  if (!n.IsMap()) throw ParseError("expected a mapping", lineOf(n), field);
  rejectUnknown(n, {"rate_mbps", "rtt_ms", "loss_pct"}, field);
  LinkSpec l;
  for (const char* key : {"rate_mbps", "rtt_ms", "loss_pct"})
    if (!n[key]) throw ParseError("missing key", lineOf(n), field + "." + key);
  l.rate_mbps = scalar<double>(n["rate_mbps"], field + ".rate_mbps");
  l.rtt_ms = scalar<double>(n["rtt_ms"], field + ".rtt_ms");
  l.loss_pct = scalar<double>(n["loss_pct"], field + ".loss_pct");
  checkLink(l);
  return l;
}

std::string fmtNum(double v) { return fmt::format("{:.6f}", v); }

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void appendUnique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

RunMatrix defaultMatrix() {
  RunMatrix m;
  m.scenarios = defaultScenarios();
  m.schedulers = schedulerNames();
  m.ccas = ccaNames();
  return m;
}

RunMatrix parseMatrix(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1, "");
  }
  RunMatrix m = defaultMatrix();
  if (root.IsNull()) return m;
  if (!root.IsMap()) throw ParseError("top level must be a mapping", lineOf(root), "");
  rejectUnknown(root, {"master_seed", "duration_s", "iterations", "schedulers", "ccas", "l3", "scenarios"}, "");

  if (root["master_seed"]) m.master_seed = scalar<std::uint64_t>(root["master_seed"], "master_seed");
  if (root["duration_s"]) m.duration_s = scalar<double>(root["duration_s"], "duration_s");
  if (root["iterations"]) m.iterations = scalar<int>(root["iterations"], "iterations");
  if (root["schedulers"]) m.schedulers = stringList(root["schedulers"], "schedulers");
  if (root["ccas"]) m.ccas = stringList(root["ccas"], "ccas");
  std::optional<LinkSpec> l3;
  if (root["l3"]) l3 = parseLink(root["l3"], "l3");
  if (root["scenarios"]) {
    const YAML::Node list = root["scenarios"];
    if (!list.IsSequence()) throw ParseError("expected a list", lineOf(list), "scenarios");
    m.scenarios.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const YAML::Node n = list[i];
      const std::string where = "scenarios[" + std::to_string(i) + "]";
      if (!n.IsMap()) throw ParseError("expected a mapping", lineOf(n), where);
      rejectUnknown(n, {"id", "family", "sf1", "sf2", "l3"}, where);
      for (const char* key : {"id", "family", "sf1", "sf2"})
        if (!n[key]) throw ParseError("missing key", lineOf(n), where + "." + key);
      Scenario s;
      s.id = scalar<std::string>(n["id"], where + ".id");
      s.family = scalar<std::string>(n["family"], where + ".family");
      s.sf1 = parseLink(n["sf1"], where + ".sf1");
      s.sf2 = parseLink(n["sf2"], where + ".sf2");
      if (n["l3"]) s.l3 = parseLink(n["l3"], where + ".l3");
      m.scenarios.push_back(s);
    }
  }
  if (l3)
    for (Scenario& s : m.scenarios) s.l3 = *l3;
  checkMatrix(m);
  return m;
}

RunMatrix loadMatrix(const std::filesystem::path& path) { return parseMatrix(readFile(path)); }

std::string dumpMatrix(const RunMatrix& m) {
  std::string out = fmt::format("master_seed: {}\nduration_s: {}\niterations: {}\n", m.master_seed, m.duration_s, m.iterations);
  auto list = [&](const char* key, const std::vector<std::string>& v) {
    out += fmt::format("{}: [{}]\n", key, fmt::join(v, ", "));
  };
  list("schedulers", m.schedulers);
  list("ccas", m.ccas);
  auto link = [](const LinkSpec& l) {
    return fmt::format("{{rate_mbps: {}, rtt_ms: {}, loss_pct: {}}}", l.rate_mbps, l.rtt_ms, l.loss_pct);
  };
  out += "scenarios:\n";
  for (const Scenario& s : m.scenarios) {
    out += fmt::format("  - id: {}\n    family: {}\n    sf1: {}\n    sf2: {}\n", s.id, s.family, link(s.sf1), link(s.sf2));
    if (!(s.l3 == LinkSpec{2000, 0, 0})) out += fmt::format("    l3: {}\n", link(s.l3));
  }
  return out;
}

void restrictMatrix(RunMatrix& m, const std::vector<std::string>& scenarios, const std::vector<std::string>& schedulers,
                    const std::vector<std::string>& ccas) {
  if (!scenarios.empty()) {
    std::vector<Scenario> kept;
    for (const std::string& id : scenarios) {
      auto it = std::find_if(m.scenarios.begin(), m.scenarios.end(), [&](const Scenario& s) { return s.id == id; });
      if (it == m.scenarios.end()) throw RangeError("unknown scenario " + id);
      kept.push_back(*it);
    }
    m.scenarios = kept;
  }
  if (!schedulers.empty()) m.schedulers = schedulers;
  if (!ccas.empty()) m.ccas = ccas;
  checkMatrix(m);
}

std::uint64_t runSeed(std::uint64_t master, const std::string& scenario, const std::string& scheduler,
                      const std::string& cca, int iteration) {
  std::uint64_t h = mixSeed(master, stableHash(scenario));
  h = mixSeed(h, stableHash(scheduler));
  h = mixSeed(h, stableHash(cca));
  return mixSeed(h, static_cast<std::uint64_t>(iteration));
}

std::vector<RunSpec> expand(const RunMatrix& m) {
  std::vector<RunSpec> out;
  out.reserve(m.size());
  for (std::size_t s = 0; s < m.scenarios.size(); ++s)
    for (const std::string& sched : m.schedulers)
      for (const std::string& cca : m.ccas)
        for (int it = 1; it <= m.iterations; ++it) {
          RunSpec r;
          r.index = out.size();
          r.scenario = s;
          r.scheduler = sched;
          r.cca = cca;
          r.iteration = it;
          r.seed = runSeed(m.master_seed, m.scenarios[s].id, sched, cca, it);
          out.push_back(r);
        }
  return out;
}

std::string runId(const RunRecord& r) { return fmt::format("{}_{}_{}_{}", r.scenario, r.scheduler, r.cca, r.iteration); }

RunRecord executeOne(const RunMatrix& m, const RunSpec& spec, bool trace) {
  const Scenario& sc = m.scenarios.at(spec.scenario);
  RunRecord rec;
  rec.scenario = sc.id;
  rec.family = sc.family;
  rec.scheduler = spec.scheduler;
  rec.cca = spec.cca;
  rec.iteration = spec.iteration;
  try {
    RunConfig cfg;
    cfg.sf1 = sc.sf1.toPath();
    cfg.sf2 = sc.sf2.toPath();
    cfg.l3 = sc.l3.toPath();
    cfg.duration = fromSeconds(m.duration_s);
    cfg.scheduler = spec.scheduler;
    cfg.cca = spec.cca;
    cfg.seed = spec.seed;
    cfg.record_trace = trace;
    RunResult r = simulate(cfg);
    rec.sf1_gp = r.sf[0].goodput_mbps;
    rec.sf2_gp = r.sf[1].goodput_mbps;
    rec.agg_gp = r.agg_goodput_mbps;
    rec.sf1_rtx = r.sf[0].retransmissions;
    rec.sf2_rtx = r.sf[1].retransmissions;
    if (r.delivered_bytes > 0) rec.avg_ppd_ms = r.avg_ppd_ms;
    rec.trace = std::move(r.trace);
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

std::vector<RunRecord> executeSerial(const RunMatrix& m, const ExecOptions& opts) {
  const std::vector<RunSpec> specs = expand(m);
  std::vector<RunRecord> out;
  out.reserve(specs.size());
  for (const RunSpec& spec : specs) {
    out.push_back(executeOne(m, spec, opts.traces));
    if (opts.progress) opts.progress(out.back());
  }
  return out;
}

std::vector<RunRecord> executeParallel(const RunMatrix& m, const ExecOptions& opts) {
  if (opts.jobs < 1) throw RangeError("jobs must be at least 1");
  const std::vector<RunSpec> specs = expand(m);
  std::vector<RunRecord> out(specs.size());
  const auto n = static_cast<long>(specs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(opts.jobs)
  for (long i = 0; i < n; ++i) {
    out[i] = executeOne(m, specs[i], opts.traces);
    if (opts.progress) {
#pragma omp critical(mpsim_progress)
      opts.progress(out[i]);
    }
  }
  return out;
}

std::vector<RunRecord> execute(const RunMatrix& m, const ExecOptions& opts) {
  if (opts.jobs < 1) throw RangeError("jobs must be at least 1");
  return opts.jobs == 1 ? executeSerial(m, opts) : executeParallel(m, opts);
}

static const char* kRunsHeader = "scenario,family,scheduler,cca,iteration,sf1_gp,sf2_gp,agg_gp,sf1_rtx,sf2_rtx,avg_ppd_ms";

std::string formatRunsCsv(const std::vector<RunRecord>& records) {
  std::string out = kRunsHeader;
  out += '\n';
  for (const RunRecord& r : records) {
    if (!r.ok) continue;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.scenario, r.family, r.scheduler, r.cca, r.iteration,
                       fmtNum(r.sf1_gp), fmtNum(r.sf2_gp), fmtNum(r.agg_gp), r.sf1_rtx, r.sf2_rtx,
                       r.avg_ppd_ms ? fmtNum(*r.avg_ppd_ms) : std::string("NA"));
  }
  return out;
}

std::vector<RunRecord> parseRunsCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRunsHeader) throw ParseError("unexpected header", 1, "header");
  std::vector<RunRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> c = splitCsv(line);
    if (c.size() != 11) throw ParseError("expected 11 columns", lineno, "row");
    RunRecord r;
    r.scenario = c[0];
    r.family = c[1];
    r.scheduler = c[2];
    r.cca = c[3];
    static const char* names[] = {"scenario", "family", "scheduler", "cca", "iteration", "sf1_gp",
                                  "sf2_gp",   "agg_gp", "sf1_rtx",   "sf2_rtx", "avg_ppd_ms"};
    std::size_t col = 4;
    try {
      r.iteration = std::stoi(c[4]);
      col = 5;
      r.sf1_gp = std::stod(c[5]);
      col = 6;
      r.sf2_gp = std::stod(c[6]);
      col = 7;
      r.agg_gp = std::stod(c[7]);
      col = 8;
      r.sf1_rtx = std::stoull(c[8]);
      col = 9;
      r.sf2_rtx = std::stoull(c[9]);
      col = 10;
      if (c[10] != "NA") r.avg_ppd_ms = std::stod(c[10]);
    } catch (const std::exception&) {
      throw ParseError("bad number '" + c[col] + "'", lineno, names[col]);
    }
    out.push_back(r);
  }
  return out;
}

ScoreTable computeScores(const std::vector<RunRecord>& records, Deviation dev) {
  ScoreTable t;
  std::map<std::string, std::vector<std::string>> family_scenarios;
  // sum and count of agg goodput per (cca, scheduler, scenario)
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, int>> acc;
  for (const RunRecord& r : records) {
    if (!r.ok) continue;
    appendUnique(t.schedulers, r.scheduler);
    appendUnique(t.ccas, r.cca);
    appendUnique(t.families, r.family);
    appendUnique(family_scenarios[r.family], r.scenario);
    auto& a = acc[{r.cca, r.scheduler, r.scenario}];
    a.first += r.agg_gp;
    a.second += 1;
  }
  for (const std::string& cca : t.ccas) {
    auto& table = t.ps[cca];
    for (const std::string& sched : t.schedulers)
      for (const std::string& fam : t.families) {
        std::vector<double> avg;
        for (const std::string& sc : family_scenarios[fam]) {
          auto it = acc.find({cca, sched, sc});
          if (it != acc.end()) avg.push_back(it->second.first / it->second.second);
        }
        if (avg.size() == family_scenarios[fam].size()) table[sched][fam] = psScore(avg, avg.size());
      }
    try {
      t.cca[cca] = ccaScores(table, t.schedulers, t.families, dev);
    } catch (const IncompleteGrid&) {
    }
  }
  return t;
}

std::string formatScoresCsv(const ScoreTable& t) {
  std::string out = "table,cca,scheduler,family,value\n";
  for (const std::string& cca : t.ccas) {
    auto ps = t.ps.find(cca);
    if (ps == t.ps.end()) continue;
    for (const std::string& sched : t.schedulers)
      for (const std::string& fam : t.families) {
        auto s = ps->second.find(sched);
        if (s == ps->second.end()) continue;
        auto f = s->second.find(fam);
        if (f != s->second.end()) out += fmt::format("PS_score,{},{},{},{}\n", cca, sched, fam, fmtNum(f->second));
      }
  }
  for (const std::string& cca : t.ccas) {
    auto it = t.cca.find(cca);
    if (it == t.cca.end()) continue;
    for (const std::string& fam : t.families)
      out += fmt::format("CCA_score_per_ScenFam,{},,{},{}\n", cca, fam, fmtNum(it->second.per_family.at(fam)));
  }
  for (const char* table : {"CCA_score", "CCA_CV", "CCA_overall_score"}) {
    for (const std::string& cca : t.ccas) {
      auto it = t.cca.find(cca);
      if (it == t.cca.end()) continue;
      const CcaScore& c = it->second;
      std::string value;
      if (std::string(table) == "CCA_score")
        value = fmtNum(c.score);
      else if (std::string(table) == "CCA_CV")
        value = fmtNum(c.cv);
      else
        value = c.overall ? fmtNum(*c.overall) : "NA";
      out += fmt::format("{},{},,,{}\n", table, cca, value);
    }
  }
  return out;
}

std::vector<std::string> rankByOverall(const ScoreTable& t) {
  std::vector<std::string> out;
  for (const auto& [cca, s] : t.cca) out.push_back(cca);
  std::stable_sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    const auto& oa = t.cca.at(a).overall;
    const auto& ob = t.cca.at(b).overall;
    if (oa.has_value() != ob.has_value()) return oa.has_value();
    return oa && *oa > *ob;
  });
  return out;
}

namespace {

// Iteration means per (cca, scheduler, scenario), grouped by (cca, scheduler).
std::map<std::pair<std::string, std::string>, std::vector<double>> scenarioMeans(
    const std::vector<RunRecord>& records, bool use_ppd) {
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, int>> acc;
  for (const RunRecord& r : records) {
    if (!r.ok) continue;
    if (use_ppd && !r.avg_ppd_ms) continue;
    auto& a = acc[{r.cca, r.scheduler, r.scenario}];
    a.first += use_ppd ? *r.avg_ppd_ms : r.agg_gp;
    a.second += 1;
  }
  std::map<std::pair<std::string, std::string>, std::vector<double>> out;
  for (const auto& [key, v] : acc) out[{std::get<0>(key), std::get<1>(key)}].push_back(v.first / v.second);
  return out;
}

std::string formatSeries(const std::vector<RunRecord>& records, bool use_ppd) {
  std::string out = use_ppd ? "cca,scheduler,avg_ppd_ms,probability\n" : "cca,scheduler,agg_gp,probability\n";
  for (const auto& [key, values] : scenarioMeans(records, use_ppd)) {
    const auto series = use_ppd ? ecdf(values) : eccdf(values);
    for (const auto& [x, p] : series) out += fmt::format("{},{},{},{}\n", key.first, key.second, fmtNum(x), fmtNum(p));
  }
  return out;
}

}  // namespace

std::string formatEccdfCsv(const std::vector<RunRecord>& records) { return formatSeries(records, false); }
std::string formatEcdfCsv(const std::vector<RunRecord>& records) { return formatSeries(records, true); }

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void emitResults(const std::vector<RunRecord>& records, const std::filesystem::path& dir) {
  if (records.empty()) throw RangeError("no results to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  // Scores come from the rounded CSV values so `score` on runs.csv reproduces them.
  const std::string runs = formatRunsCsv(records);
  const std::vector<RunRecord> rows = parseRunsCsv(runs);
  writeFile(dir / "runs.csv", runs);
  writeFile(dir / "scores.csv", formatScoresCsv(computeScores(rows)));
  writeFile(dir / "eccdf.csv", formatEccdfCsv(rows));
  writeFile(dir / "ecdf.csv", formatEcdfCsv(rows));
  const bool any_trace = std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return !r.trace.empty(); });
  if (any_trace) {
    std::filesystem::create_directories(dir / "traces", ec);
    if (ec) throw IoError("cannot create traces directory: " + ec.message());
    for (const RunRecord& r : records)
      if (!r.trace.empty()) writeFile(dir / "traces" / (runId(r) + ".log"), r.trace);
  }
}

}  // namespace mpsim
