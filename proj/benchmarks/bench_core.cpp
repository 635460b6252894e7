#include <random>

#include <benchmark/benchmark.h>

#include "pwasync/lmi_synthesis.hpp"
#include "pwasync/run_config.hpp"
#include "pwasync/simulator.hpp"
#include "pwasync/sym_eig.hpp"

namespace {

void BM_SymEig(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  m = 0.5 * (m + m.transpose()).eval();
  for (auto _ : state) benchmark::DoNotOptimize(pwasync::sym_eig(m));
}
BENCHMARK(BM_SymEig)->Arg(3)->Arg(4)->Arg(12);

void BM_Synthesize(benchmark::State& state) {
  const auto sys = pwasync::build_coupled_system({});
  for (auto _ : state) benchmark::DoNotOptimize(pwasync::synthesize(sys));
}
BENCHMARK(BM_Synthesize)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto sys = pwasync::build_coupled_system({});
  pwasync::SimConfig cfg;
  cfg.horizon = static_cast<double>(state.range(0));
  cfg.K = pwasync::reference_lmi_gain();
  for (auto _ : state) benchmark::DoNotOptimize(pwasync::simulate(sys, cfg));
}
BENCHMARK(BM_Simulate)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
