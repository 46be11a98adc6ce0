// Serial reference vs OpenMP versions of the two parallel kernels.
#include <benchmark/benchmark.h>

#include <omp.h>

#include "bekf/certificates.hpp"
#include "bekf/simulation.hpp"

namespace {

using namespace bekf;

ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.horizon = 0.4;
  c.n_runs = 8;
  return c;
}

void BM_ExperimentSerial(benchmark::State& state) {
  const ExperimentConfig c = small_experiment();
  const SystemModel m = example_model();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(c, m));
  state.SetItemsProcessed(state.iterations() * c.n_runs);
}

void BM_ExperimentParallel(benchmark::State& state) {
  ExperimentConfig c = small_experiment();
  c.threads = static_cast<int>(state.range(0));
  const SystemModel m = example_model();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c, m));
  state.SetItemsProcessed(state.iterations() * c.n_runs);
}

struct ValidationCase {
  SystemModel model = example_model();
  Eigen::Vector2d x{8.0, 0.0};
  SymMatrix p = build_p_frame(2).members[1];
  Certificate cert = certify_sos(model, x, 0.5 * SymMatrix::identity(2), p, {}, 1);
  ValidationOptions options;
};

void BM_ValidateSerial(benchmark::State& state) {
  static const ValidationCase vc;
  for (auto _ : state) benchmark::DoNotOptimize(validate_certificate_serial(vc.model, vc.x, vc.p, vc.cert, vc.options));
  state.SetItemsProcessed(state.iterations() * vc.options.n_samples);
}

void BM_ValidateParallel(benchmark::State& state) {
  static const ValidationCase vc;
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(validate_certificate(vc.model, vc.x, vc.p, vc.cert, vc.options));
  state.SetItemsProcessed(state.iterations() * vc.options.n_samples);
}

}  // namespace

BENCHMARK(BM_ExperimentSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExperimentParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ValidateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValidateParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
