#include <benchmark/benchmark.h>

#include <random>

#include "stochphase/config.hpp"
#include "stochphase/operators.hpp"
#include "stochphase/simulate.hpp"
#include "stochphase/spectral.hpp"

namespace {

using namespace stochphase;

OscillatorModel sl_model() {
  StuartLandauParams p;
  p.sigma = 0.3;
  return make_model(ModelConfig{p});
}

GridSpec sized(int na, int nb) {
  StuartLandauParams p;
  p.sigma = 0.3;
  GridSpec g = default_grid_for(ModelConfig{p});
  g.n_alpha = na;
  g.n_beta = nb;
  return g;
}

void BM_AssembleBackward(benchmark::State& state) {
  auto model = sl_model();
  auto grid = AnnulusGrid::make(sized(static_cast<int>(state.range(0)),
                                      static_cast<int>(state.range(1))));
  for (auto _ : state) {
    auto op = assemble_backward(model, grid);
    benchmark::DoNotOptimize(op);
  }
  state.SetItemsProcessed(state.iterations() * grid->size());
}
BENCHMARK(BM_AssembleBackward)->Args({64, 32})->Args({128, 64})->Args({256, 128})
    ->Unit(benchmark::kMillisecond);

void BM_LeadingEigenpair(benchmark::State& state) {
  auto model = sl_model();
  auto grid = AnnulusGrid::make(sized(static_cast<int>(state.range(0)),
                                      static_cast<int>(state.range(1))));
  auto op = assemble_backward(model, grid);
  for (auto _ : state) {
    auto pair = leading_eigenpair(op);
    benchmark::DoNotOptimize(pair.lambda);
  }
}
BENCHMARK(BM_LeadingEigenpair)->Args({64, 32})->Args({128, 64})
    ->Unit(benchmark::kMillisecond);

void BM_EulerMaruyamaStep(benchmark::State& state) {
  auto model = sl_model();
  std::mt19937_64 rng = stream_engine(1, 0);
  std::normal_distribution<double> normal;
  const double dt = 1e-3;
  const double sqrt_dt = std::sqrt(dt);
  Vec2 x(1.0, 0.0);
  for (auto _ : state) {
    x = em_step(model, x, dt, sqrt_dt, rng, normal);
    benchmark::DoNotOptimize(x);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EulerMaruyamaStep);

}  // namespace

BENCHMARK_MAIN();
