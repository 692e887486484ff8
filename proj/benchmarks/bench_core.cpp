#include <benchmark/benchmark.h>

#include "fwmkv/fwmkv.hpp"
#include "oracles.hpp"

using namespace fwmkv;

namespace {

PeriodicFunction1D one_plus_cos() {
  return PeriodicFunction1D::sample([](double y) { return 1.0 + std::cos(y); });
}

void BM_FourierTable(benchmark::State& state) {
  const TorusMeasure mu = tools::random_cloud(1, static_cast<std::size_t>(state.range(0)), 1, true);
  for (auto _ : state) benchmark::DoNotOptimize(fourier_table(mu, 64));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FourierTable)->Arg(1000)->Arg(8000);

void BM_RhoLambda2D(benchmark::State& state) {
  const TorusMeasure mu = tools::random_cloud(2, 500, 1);
  const TorusMeasure nu = tools::random_cloud(2, 500, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rho_lambda(mu, nu, 4.0, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_RhoLambda2D)->Arg(8)->Arg(16);

void BM_W1Circle(benchmark::State& state) {
  const ParticleCloud mu = tools::random_cloud(1, static_cast<std::size_t>(state.range(0)), 3);
  const ParticleCloud nu = tools::random_cloud(1, static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(w1_circle(mu, nu));
}
BENCHMARK(BM_W1Circle)->Arg(100)->Arg(10000);

void BM_ParticleStep(benchmark::State& state) {
  const CoefficientFamily fam = eikonal_family(one_plus_cos(), 1.0);
  SimulationConfig cfg;
  cfg.particles = static_cast<std::size_t>(state.range(0));
  cfg.dt = 1e-4;
  cfg.record_stride = 0;
  ParticleSystem sys(TorusMeasure::uniform(1), fam, cfg);
  const FeedbackMap alpha = FeedbackMap::constant(0.5);
  for (auto _ : state) {
    if (sys.global_step() >= cfg.steps()) sys = ParticleSystem(TorusMeasure::uniform(1), fam, cfg);
    sys.step(alpha);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParticleStep)->Arg(2000)->Arg(8000);

void BM_EikonalSweep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const EikonalProblem p{one_plus_cos(), n, n};
  for (auto _ : state) benchmark::DoNotOptimize(eikonal_solve(p, false));
}
BENCHMARK(BM_EikonalSweep)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ValueSearchDepth2(benchmark::State& state) {
  const CoefficientFamily fam = eikonal_family(one_plus_cos(), 1.0);
  SearchConfig cfg;
  cfg.sim.particles = 500;
  cfg.sim.dt = 0.025;
  cfg.depth = 2;
  cfg.mc_reps = 0;
  const ControlDictionary dict = ControlDictionary::constants(-2.0, 2.0, 9);
  for (auto _ : state) benchmark::DoNotOptimize(value_search(0.0, TorusMeasure::dirac1(0.0), fam, dict, cfg));
}
BENCHMARK(BM_ValueSearchDepth2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
