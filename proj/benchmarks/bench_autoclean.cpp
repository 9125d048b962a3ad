#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>

#include "autoclean/baselines.hpp"
#include "autoclean/interp.hpp"
#include "autoclean/metrics.hpp"
#include "autoclean/optim.hpp"
#include "autoclean/reject_global.hpp"
#include "autoclean/reject_local.hpp"
#include "autoclean/synth.hpp"

using namespace autoclean;

namespace {

Simulation bench_data(std::size_t n, std::size_t q, int global_bad = 0) {
  SimConfig c;
  c.n_trials = n;
  c.n_sensors = q;
  c.global_bad_sensors = global_bad;
  return simulate(c);
}

void BM_PeakToPeak(benchmark::State& state) {
  const auto sim = bench_data(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) benchmark::DoNotOptimize(peak_to_peak(sim.corrupted));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sim.corrupted.data().size()));
}
BENCHMARK(BM_PeakToPeak)->Arg(100)->Arg(400);

void BM_GlobalCvEvaluation(benchmark::State& state) {
  const auto sim = bench_data(static_cast<std::size_t>(state.range(0)), 32);
  const auto amps = peak_to_peak(sim.corrupted);
  const auto m = amps.trial_max();
  const ThresholdCv cv(sim.corrupted.as_matrix(), {m.data(), m.data() + m.size()},
                       make_folds(sim.corrupted.n_trials(), kDefaultFolds, 0));
  const double tau = m.mean();
  for (auto _ : state) benchmark::DoNotOptimize(cv.evaluate(tau));
}
BENCHMARK(BM_GlobalCvEvaluation)->Arg(100)->Arg(400);

void BM_FitGlobal(benchmark::State& state) {
  const auto sim = bench_data(100, 32);
  for (auto _ : state) benchmark::DoNotOptimize(fit_global(sim.corrupted, kDefaultFolds, 0));
}
BENCHMARK(BM_FitGlobal)->Unit(benchmark::kMillisecond);

void BM_BuildOperator(benchmark::State& state) {
  const auto q = static_cast<std::size_t>(state.range(0));
  const auto layout = fibonacci_layout(q);
  std::vector<std::size_t> sources(q - 1);
  std::iota(sources.begin(), sources.end(), 1);
  const std::size_t target[] = {0};
  for (auto _ : state) benchmark::DoNotOptimize(build_operator(layout, sources, target));
}
BENCHMARK(BM_BuildOperator)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Augment(benchmark::State& state) {
  const auto sim = bench_data(100, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(augment(sim.corrupted, sim.layout));
}
BENCHMARK(BM_Augment)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_MinimizeScalar(benchmark::State& state) {
  const auto f = [](double x) { return (x - 0.3) * (x - 0.3) + 0.1 * std::sin(20.0 * x); };
  for (auto _ : state) benchmark::DoNotOptimize(minimize_scalar(f, {0.0, 1.0}, Budget{}, 1));
}
BENCHMARK(BM_MinimizeScalar)->Unit(benchmark::kMillisecond);

void BM_FitLocal(benchmark::State& state) {
  const auto sim = bench_data(100, 32);
  LocalConfig config;
  config.n_jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_local(sim.corrupted, sim.layout, config));
}
BENCHMARK(BM_FitLocal)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Faster(benchmark::State& state) {
  const auto sim = bench_data(100, 32, 1);
  for (auto _ : state) benchmark::DoNotOptimize(faster_bad_sensors(sim.corrupted, sim.layout));
}
BENCHMARK(BM_Faster)->Unit(benchmark::kMillisecond);

void BM_Sns(benchmark::State& state) {
  const auto sim = bench_data(100, 32, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sns_clean(sim.corrupted));
}
BENCHMARK(BM_Sns)->Unit(benchmark::kMillisecond);

void BM_Ransac(benchmark::State& state) {
  const auto sim = bench_data(100, 32, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ransac_bad_sensors(sim.corrupted, sim.layout, {}));
}
BENCHMARK(BM_Ransac)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
