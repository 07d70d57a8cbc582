#include <gtest/gtest.h>

#include "oracle/oracle_checks.hpp"

namespace {

const std::vector<oracle::Report>& reports() {
  static const std::vector<oracle::Report> all = oracle::runAll();
  return all;
}

const oracle::Report& find(const std::string& name) {
  for (const auto& r : reports())
    if (r.name == name) return r;
  throw std::runtime_error("no report " + name);
}

}  // namespace

TEST(Oracle, EveryStepFunctionMatchesItsTranscription) {
  ASSERT_EQ(reports().size(), 13u);
  for (const auto& r : reports()) {
    EXPECT_EQ(r.mismatches, 0u) << r.name << ": " << r.first;
    EXPECT_GE(r.cases, 10000u) << r.name;
  }
}

TEST(Oracle, BbrGeneratorVisitsEveryMode) {
  const auto& r = find("bbr");
  for (const char* m : {"Startup", "Drain", "ProbeBW", "ProbeRTT"}) EXPECT_GT(r.coverage.count(m) ? r.coverage.at(m) : 0, 0u) << m;
}

TEST(Oracle, CoupledBranchesAreReached) {
  EXPECT_GT(find("cmpbbr").coverage.at("close"), 0u);
  EXPECT_GT(find("cmpbbr").coverage.at("shared_bottleneck"), 0u);
  EXPECT_GT(find("olia").coverage.at("collected"), 0u);
}

TEST(Oracle, ReproducibleForSeed) {
  const auto a = oracle::checkCubic(3, 500);
  const auto b = oracle::checkCubic(3, 500);
  EXPECT_EQ(a.cases, b.cases);
  EXPECT_EQ(a.coverage, b.coverage);
}
