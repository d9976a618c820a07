#include <benchmark/benchmark.h>

#include <random>

#include "cellfclust/constraints.hpp"
#include "cellfclust/datagen.hpp"
#include "cellfclust/estimation.hpp"
#include "cellfclust/init.hpp"

using namespace cellfclust;

namespace {

FitConfig design_config() {
  FitConfig cfg;
  cfg.K = 2;
  cfg.alpha = 0.05;
  cfg.c = 80.0;
  cfg.m = 1.5;
  return cfg;
}

void BM_FitSingle(benchmark::State& state) {
  SyntheticSpec spec = preset(Preset::paper_design_1);
  spec.n = state.range(0);
  spec.overrides.clear();
  spec.contamination_rate.assign(5, 0.05);
  const DataSet data = generate(spec).data;
  const FitConfig cfg = design_config();
  const InitialState init = initialize(data, cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_single(data, cfg, init));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitSingle)->Arg(200)->Arg(800)->Arg(3200)->Unit(benchmark::kMillisecond)->Complexity();

void BM_ComputeDelta(benchmark::State& state) {
  const DataSet data = generate(preset(Preset::paper_design_1)).data;
  const FitConfig cfg = design_config();
  const InitialState init = initialize(data, cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(compute_delta(data, init.w0, init.u0, init.params0, cfg.m));
}
BENCHMARK(BM_ComputeDelta)->Unit(benchmark::kMicrosecond);

void BM_Truncation(benchmark::State& state) {
  const auto K = static_cast<int>(state.range(0));
  const Index J = state.range(1);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  std::vector<MatrixXd> covs;
  std::vector<double> masses;
  for (int k = 0; k < K; ++k) {
    MatrixXd a(J, J);
    for (Index i = 0; i < J; ++i)
      for (Index j = 0; j < J; ++j) a(i, j) = gauss(rng);
    covs.push_back(a * a.transpose() + 1e-3 * MatrixXd::Identity(J, J));
    masses.push_back(10.0 + k);
  }
  for (auto _ : state) benchmark::DoNotOptimize(truncate_eigenvalues(covs, masses, 4.0));
}
BENCHMARK(BM_Truncation)->Args({2, 5})->Args({4, 5})->Args({4, 20})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
