#include <benchmark/benchmark.h>

#include "mpsim/harness.hpp"

using namespace mpsim;

namespace {

RunMatrix smallMatrix() {
  RunMatrix m = defaultMatrix();
  restrictMatrix(m, {"hom_bw_delay", "int_het_loss_bw_delay", "mix_het_delay_loss"}, {"minrtt", "blest"}, {"cubic", "bbr"});
  m.iterations = 2;
  m.duration_s = 2.0;
  return m;
}

void BM_ExecuteSerial(benchmark::State& state) {
  const RunMatrix m = smallMatrix();
  for (auto _ : state) benchmark::DoNotOptimize(executeSerial(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}

void BM_ExecuteParallel(benchmark::State& state) {
  const RunMatrix m = smallMatrix();
  ExecOptions o;
  o.jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(executeParallel(m, o));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}

}  // namespace

BENCHMARK(BM_ExecuteSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExecuteParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
