#include <benchmark/benchmark.h>

#include <dualhjb/dual_value.hpp>
#include <dualhjb/primal_value.hpp>
#include <dualhjb/simulation.hpp>

using namespace dualhjb;

namespace {

UtilityFunction kinked() {
  return UtilityFunction::min_of_pieces({PowerBranch::linear(1.0), PowerBranch::power(1.0, 0.5)});
}

EffectiveMarket market() {
  return EffectiveMarket(MarketParams::scalar(0.2, 0.4, 1.0, ConeSpec::whole_space(1)));
}

void BM_HatVDerivs(benchmark::State& state) {
  const DualSurface ds(conjugate(kinked()), market());
  double y = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hatV_derivs(ds, 0.5, y));
    y = y < 3.0 ? y * 1.01 : 0.3;
  }
}
BENCHMARK(BM_HatVDerivs);

void BM_InverseY(benchmark::State& state) {
  const DualSurface ds(conjugate(kinked()), market());
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inverse_Y(ds, 0.5, x));
    x = x < 10.0 ? x * 1.05 : 0.1;
  }
}
BENCHMARK(BM_InverseY);

void BM_SimulateOptimal(benchmark::State& state) {
  const PrimalSurface ps(DualSurface(conjugate(kinked()), market()));
  SimConfig cfg;
  cfg.paths = static_cast<std::size_t>(state.range(0));
  cfg.steps_per_year = 250;
  const auto grid = simulation_time_grid(ps.market().params(), cfg.steps_per_year, cfg.time_grading);
  const OptimalControlTable table(ps, grid, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_wealth(ps.market(), table, 1.0, cfg).mean);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateOptimal)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
