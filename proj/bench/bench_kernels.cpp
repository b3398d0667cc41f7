// Serial reference versus OpenMP kernels. The worker count is the benchmark
// argument; 1 takes the serial path.

#include <benchmark/benchmark.h>

#include "mpa/ensemble.hpp"
#include "mpa/model.hpp"
#include "mpa/parallel.hpp"
#include "mpa/spectral.hpp"

using namespace mpa;

namespace {

const DisorderSpec kGauss{Gaussian{0.0, 1.0}, 1};
const InteractionSpec kPhi{1, {1.0, 0.5}};

void worker_args(benchmark::internal::Benchmark* b) {
  b->Arg(1);
  const int w = std::max(2, parallel::available_workers());
  b->Arg(w);
  b->UseRealTime();
}

void BM_DiagonalPotential(benchmark::State& state) {
  const Cube c(Site::origin(2, 2), 8);  // 83521 sites
  const auto field = sample_field(kGauss, projection_region(c), 0);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(diagonal_potential(c, field, kPhi, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.cardinality()));
}
BENCHMARK(BM_DiagonalPotential)->Apply(worker_args);

void BM_SparseAssembly(benchmark::State& state) {
  const Cube c(Site::origin(2, 2), 8);
  const auto field = sample_field(kGauss, projection_region(c), 0);
  AssemblyOptions opts;
  opts.storage = Storage::Sparse;
  opts.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_hamiltonian(c, field, kPhi, opts));
}
BENCHMARK(BM_SparseAssembly)->Apply(worker_args);

void BM_CombesThomasSweep(benchmark::State& state) {
  const Cube c(Site::origin(2, 2), 2);  // 625 sites
  const auto H = assemble_hamiltonian(c, sample_field(kGauss, projection_region(c), 0), kPhi);
  DiagonalizeOptions values;
  values.vectors = false;
  const auto ev = diagonalize(H, values).eigenvalues;
  const double E = ev.minCoeff() - 0.5;
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    if (workers == 1) {
      benchmark::DoNotOptimize(combes_thomas_check_serial(H, E, 0.5));
    } else {
      benchmark::DoNotOptimize(combes_thomas_check(H, E, 0.5, workers));
    }
  }
}
BENCHMARK(BM_CombesThomasSweep)->Apply(worker_args);

void BM_WegnerEnsemble(benchmark::State& state) {
  WegnerConfig cfg;
  cfg.dims = Dims{1, 2, 2};
  cfg.u = Site(1, {0, 0});
  cfg.v = Site(1, {20, 20});
  cfg.disorder = kGauss;
  cfg.trials = 200;
  cfg.modulus_trials = 0;
  cfg.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(wegner_experiment(cfg));
}
BENCHMARK(BM_WegnerEnsemble)->Apply(worker_args);

void BM_LifshitzEnsemble(benchmark::State& state) {
  LifshitzConfig cfg;
  cfg.dims = Dims{1, 2, 2};
  cfg.L0 = 16;
  cfg.disorder = DisorderSpec{Uniform{0.0, 1.0}, 1};
  cfg.trials = 100;
  cfg.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lifshitz_experiment(cfg));
}
BENCHMARK(BM_LifshitzEnsemble)->Apply(worker_args);

}  // namespace

BENCHMARK_MAIN();
