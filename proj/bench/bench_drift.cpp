#include <benchmark/benchmark.h>

#include "mfl/control.hpp"
#include "mfl/dataset.hpp"
#include "mfl/model.hpp"
#include "mfl/ode.hpp"

namespace {

struct Fixture {
    mfl::ModelSpec model = mfl::make_builtin_model(mfl::BuiltinKind::neural_ode_tanh, 2, 3, 0);
    mfl::TimeGrid grid{1.0, 8};
    mfl::ParticleCloud cloud;
    mfl::Dataset data;

    Fixture(int n_particles, int n_samples)
        : cloud(mfl::cloud_init(n_particles, grid, model.dim_param, mfl::InitLaw::gaussian(0.0, 1.0), 7)),
          data(mfl::generate_regression(mfl::RegressionSpec{2, 1.0, {}}, n_samples, 11)) {}
};

void BM_drift_serial(benchmark::State& state) {
    Fixture fx(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(mfl::mean_field_drift_serial(fx.model, fx.cloud, fx.data));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_drift_parallel(benchmark::State& state) {
    Fixture fx(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state)
        benchmark::DoNotOptimize(mfl::mean_field_drift(fx.model, fx.cloud, fx.data, mfl::Exec::parallel));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

}  // namespace

BENCHMARK(BM_drift_serial)->Args({64, 32})->Args({256, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_drift_parallel)->Args({64, 32})->Args({256, 64})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
