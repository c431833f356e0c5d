#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "superfractal/kernels.hpp"
#include "superfractal/levy.hpp"
#include "superfractal/loglaplace.hpp"
#include "superfractal/mfa.hpp"
#include "superfractal/rng.hpp"
#include "superfractal/simulation.hpp"
#include "superfractal/stable_density.hpp"

using namespace superfractal;

namespace {

std::vector<double> brownian_path(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> f(n);
  double s = 0.0;
  const double step = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : f) {
    v = s;
    s += step * rng.normal();
  }
  return f;
}

void UnitDensityPdf(benchmark::State& state) {
  const auto d = UnitStableDensity::get(1.6);
  double x = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(d->pdf(x));
    x = x > 50.0 ? 0.0 : x + 0.37;
  }
}
BENCHMARK(UnitDensityPdf);

void BuildKernel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_kernel(1.6, 0.1, Grid1D(-8.0, 8.0, n)));
}
BENCHMARK(BuildKernel)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

void SemigroupStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Grid1D g(-0.5, 1.5, n);
  SpectralPropagator prop(g, 1.6);
  const auto mult = prop.multiplier(1e-3);
  std::vector<double> f = lebesgue_density_on_grid(InitialMeasure::lebesgue(0.0, 1.0), g);
  for (auto _ : state) {
    prop.apply(f, mult);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(SemigroupStep)->Arg(1 << 12)->Arg(1 << 14);

void StableTerminal(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_terminal(1.5, 1.0, 1e-3, seed++));
}
BENCHMARK(StableTerminal);

void LogLaplaceSolve(benchmark::State& state) {
  const Grid1D g(-0.5, 1.5, 1024);
  ModelParams p;
  p.t = 0.3;
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double u = (g.x(i) - 0.5) / 0.2;
    phi[i] = std::abs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_log_laplace(phi, p, g, 200));
}
BENCHMARK(LogLaplaceSolve)->Unit(benchmark::kMillisecond);

void SimulateReplica(benchmark::State& state) {
  ModelParams p;
  p.t = 0.3;
  SimulationOptions o;
  o.r_min = 1e-4;
  o.time_steps = 100;
  o.store_fields = false;
  const SimulationPlan plan(p, Grid1D(-0.5, 1.5, static_cast<std::size_t>(state.range(0))), o);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_measure_path(plan, seed++));
}
BENCHMARK(SimulateReplica)->Arg(1 << 10)->Arg(1 << 12)->Unit(benchmark::kMillisecond);

void HolderFieldScan(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Grid1D g(-0.5, 1.5, n);
  const auto f = brownian_path(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(holder_field(f, g));
}
BENCHMARK(HolderFieldScan)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

void BoxCounting(benchmark::State& state) {
  const Grid1D g(0.0, 1.0, 1 << 16);
  Rng rng(2);
  std::vector<std::size_t> pts;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (rng.uniform() < 0.05) pts.push_back(i);
  const auto scales = dyadic_scales(2, 12);
  for (auto _ : state) benchmark::DoNotOptimize(box_dimension(pts, g, scales));
}
BENCHMARK(BoxCounting)->Unit(benchmark::kMillisecond);

void SumRule(benchmark::State& state) {
  ModelParams p;
  const auto st = derive_exponents(p);
  for (auto _ : state) benchmark::DoNotOptimize(census_sum_rule(p, st, 4.5e-4, 0.5, 0.55));
}
BENCHMARK(SumRule)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
