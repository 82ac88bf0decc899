#include <benchmark/benchmark.h>

#include <cstdlib>

#include "bishop/fit.hpp"
#include "bishop/sampler.hpp"
#include "bishop/simulate.hpp"

using namespace bishop;

namespace {

void BM_NutsStandardNormal(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const LogDensityFn logp = [](std::span<const double> x, std::span<double> g) {
    double lp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      lp -= 0.5 * x[i] * x[i];
      g[i] = -x[i];
    }
    return lp;
  };
  NutsConfig cfg;
  cfg.chains = 1;
  cfg.warmup = 200;
  cfg.samples = 200;
  for (auto _ : state) {
    cfg.seed += 1;
    benchmark::DoNotOptimize(sample(logp, SampleSpace::identity(dim), cfg));
  }
}

// One short chain on the full model, warmup included.
void BM_FitCohort(benchmark::State& state) {
  const auto sim = simulate_cohort(default_truth(), static_cast<std::size_t>(state.range(0)), 3);
  FitOptions options;
  options.nuts.chains = 1;
  options.nuts.warmup = 100;
  options.nuts.samples = 100;
  for (auto _ : state) benchmark::DoNotOptimize(fit_cohort(sim.cohort, options));
}

}  // namespace

BENCHMARK(BM_NutsStandardNormal)->Arg(2)->Arg(68)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitCohort)->Arg(82)->Unit(benchmark::kSecond)->Iterations(1);
