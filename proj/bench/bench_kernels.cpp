// Serial reference vs OpenMP kernel, pairwise. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "m3d/burst.hpp"
#include "m3d/fitting.hpp"
#include "m3d/io.hpp"
#include "m3d/simulator.hpp"

using namespace m3d;

namespace {

SimulationConfig ensemble_config() {
  SimulationConfig c;
  c.users = 100;
  c.mu = HomogeneousMu{0.5};
  c.lambda = 0.05;
  c.actions = 2000;
  c.seed = 3;
  return c;
}

void BM_ensemble_serial(benchmark::State& state) {
  const auto c = ensemble_config();
  const auto model = resolve_model(c);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_ensemble_serial(c, model));
}

void BM_ensemble_omp(benchmark::State& state) {
  const auto c = ensemble_config();
  const auto model = resolve_model(c);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_ensemble(c, model));
}

void BM_horizon_serial(benchmark::State& state) {
  const auto model = IndividualModel::homogeneous(100, 0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(log_counts_at_horizon_serial(model, {2.0, 2.0}, 200, 500, 1));
}

void BM_horizon_omp(benchmark::State& state) {
  const auto model = IndividualModel::homogeneous(100, 0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(log_counts_at_horizon(model, {2.0, 2.0}, 200, 500, 1));
}

std::vector<double> powerlaw_sample(std::size_t n) {
  Stream s(5, 0, StreamDomain::test);
  std::vector<double> x(n);
  for (double& v : x) v = sample_discrete_powerlaw(2.3, 4.0, s);
  return x;
}

void BM_xmin_scan_serial(benchmark::State& state) {
  const auto x = powerlaw_sample(20000);
  for (auto _ : state) benchmark::DoNotOptimize(powerlaw_fit_serial(x));
}

void BM_xmin_scan_omp(benchmark::State& state) {
  const auto x = powerlaw_sample(20000);
  for (auto _ : state) benchmark::DoNotOptimize(powerlaw_fit(x));
}

void BM_bootstrap_serial(benchmark::State& state) {
  const auto x = powerlaw_sample(2000);
  const auto fit = powerlaw_fit(x);
  for (auto _ : state) benchmark::DoNotOptimize(powerlaw_pvalue_serial(x, fit, 20, 7));
}

void BM_bootstrap_omp(benchmark::State& state) {
  const auto x = powerlaw_sample(2000);
  const auto fit = powerlaw_fit(x);
  for (auto _ : state) benchmark::DoNotOptimize(powerlaw_pvalue(x, fit, 20, 7));
}

std::vector<GroupTrajectory> burst_corpus() {
  SynthOptions opt;
  opt.scenario = Scenario::burst_injected;
  opt.sim.users = 20;
  opt.sim.actions = 200;
  opt.sim.max_ticks = 200;
  return synth_corpus(opt).trajectories;
}

void BM_dataset_serial(benchmark::State& state) {
  const auto trajs = burst_corpus();
  for (auto _ : state)
    benchmark::DoNotOptimize(build_dataset_serial(trajs, 5, FeatureKind::factor, 3));
}

void BM_dataset_omp(benchmark::State& state) {
  const auto trajs = burst_corpus();
  for (auto _ : state) benchmark::DoNotOptimize(build_dataset(trajs, 5, FeatureKind::factor, 3));
}

}  // namespace

BENCHMARK(BM_ensemble_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ensemble_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_horizon_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_horizon_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_xmin_scan_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_xmin_scan_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dataset_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dataset_omp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
