#include <benchmark/benchmark.h>

#include "upcross/estimators.hpp"
#include "upcross/oracle.hpp"
#include "upcross/pointproc.hpp"

using namespace upcross;

namespace {

void BM_GenerateWindow(benchmark::State& state) {
  const ProcessSpec spec = builtin_process("ex61");
  const auto n = static_cast<std::size_t>(state.range(0));
  SamplePath path;
  InnovationStream scratch;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    generate_window_into(spec, n, seed++, path, scratch);
    benchmark::DoNotOptimize(path.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_GenerateWindow)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_MarkUpcrossings(benchmark::State& state) {
  const ProcessSpec spec = builtin_process("ex61");
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> tp{1.0, 1.0};
  const LevelVector lv = levels_from_tau_prime(tp, n);
  const SamplePath path = generate_window(spec, n, 7);
  for (auto _ : state) {
    UpcrossingMarks m = mark_upcrossings(path, lv);
    benchmark::DoNotOptimize(m.counts.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MarkUpcrossings)->Arg(10000)->Arg(100000);

void BM_Simulate(benchmark::State& state) {
  const ProcessSpec spec = builtin_process("ex62");
  const std::size_t n = 10000;
  const std::vector<double> tp{1.0, 2.0};
  const LevelVector lv = levels_from_tau_prime(tp, n);
  for (auto _ : state) {
    SimulationResult r = simulate(spec, lv, default_block_count(n), SimulationSettings{100, 1, 1});
    benchmark::DoNotOptimize(r.tallies.data());
  }
  state.SetItemsProcessed(state.iterations() * 100 * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

void BM_ExactWindowProb(benchmark::State& state) {
  const ProcessSpec spec = builtin_process("ex61");
  const auto n = static_cast<std::size_t>(state.range(0));
  const LevelVector lv{n, {0.85, 0.9}};
  const WindowPredicate two = [](const WindowOutcome& w) { return w.union_upcrossings() >= 2; };
  for (auto _ : state) benchmark::DoNotOptimize(exact_window_prob(spec, lv, n, two));
}
BENCHMARK(BM_ExactWindowProb)->DenseRange(2, 8, 2)->Unit(benchmark::kMillisecond);

void BM_ExactProbUpcrossing(benchmark::State& state) {
  const ProcessSpec spec = builtin_process("ex61");
  const Event e = upcrossing_event(spec, 0, 1, 0.9) && upcrossing_event(spec, 1, 3, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(exact_prob(e));
}
BENCHMARK(BM_ExactProbUpcrossing);

}  // namespace

BENCHMARK_MAIN();
