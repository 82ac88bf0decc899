#include <benchmark/benchmark.h>

#include <random>

#include "bishop/fit.hpp"
#include "bishop/simulate.hpp"

using namespace bishop;

namespace {

Model model_for(std::size_t n) {
  const auto sim = simulate_cohort(default_truth(), n, 1);
  return build_model(preprocess_outcomes(sim.cohort));
}

std::vector<double> random_theta(const Model& m) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 0.5);
  std::vector<double> theta(m.space().dimension());
  for (auto& t : theta) t = n(rng);
  return theta;
}

void BM_LogDensity(benchmark::State& state) {
  const Model m = model_for(static_cast<std::size_t>(state.range(0)));
  const auto theta = random_theta(m);
  for (auto _ : state) benchmark::DoNotOptimize(m.log_density(theta));
}

void BM_LogDensityGradient(benchmark::State& state) {
  const Model m = model_for(static_cast<std::size_t>(state.range(0)));
  const auto theta = random_theta(m);
  std::vector<double> grad(theta.size());
  for (auto _ : state) benchmark::DoNotOptimize(m.log_density_gradient(theta, grad));
}

}  // namespace

BENCHMARK(BM_LogDensity)->Arg(82)->Arg(500);
BENCHMARK(BM_LogDensityGradient)->Arg(82)->Arg(500)->Unit(benchmark::kMicrosecond);
