#include <benchmark/benchmark.h>

#include "snsim/experiment.hpp"
#include "snsim/rng.hpp"

namespace {

using namespace snsim;

GridSpec grid2d(int n) { return GridSpec{2, n, 2.0 * std::numbers::pi}; }

void BM_fft_roundtrip(benchmark::State& state) {
    const GridSpec grid = grid2d(static_cast<int>(state.range(0)));
    SpectralField u = random_divfree_field(grid, 1, 1.0, 4.0);
    for (auto _ : state) {
        auto phys = u.to_physical(0);
        benchmark::DoNotOptimize(phys.data());
    }
}
BENCHMARK(BM_fft_roundtrip)->Arg(32)->Arg(64)->Arg(128);

void BM_besov_norm(benchmark::State& state) {
    const GridSpec grid = grid2d(static_cast<int>(state.range(0)));
    const DyadicPartition P = build_partition(grid);
    SpectralField u = random_divfree_field(grid, 1, 1.0, 4.0);
    const BesovParams params{0.0, 2.0, 2.0};
    for (auto _ : state) benchmark::DoNotOptimize(besov_norm(u, params, P));
}
BENCHMARK(BM_besov_norm)->Arg(32)->Arg(64);

void BM_nonlinear_term(benchmark::State& state) {
    const GridSpec grid = grid2d(static_cast<int>(state.range(0)));
    SpectralField u = random_divfree_field(grid, 1, 1.0, 4.0);
    for (auto _ : state) benchmark::DoNotOptimize(nonlinear_term(u, u));
}
BENCHMARK(BM_nonlinear_term)->Arg(32)->Arg(64)->Arg(128);

void BM_noise_eval_all(benchmark::State& state) {
    const GridSpec grid = grid2d(64);
    NoiseModel model;
    model.mode_count = static_cast<int>(state.range(0));
    model.couplings.assign(static_cast<std::size_t>(model.mode_count), 0.02);
    model.prepare(grid);
    SpectralField u = random_divfree_field(grid, 1, 1.0, 4.0);
    for (auto _ : state) benchmark::DoNotOptimize(noise_eval_all(model, 0.0, u));
}
BENCHMARK(BM_noise_eval_all)->Arg(2)->Arg(4)->Arg(8);

void BM_time_step_path(benchmark::State& state) {
    const GridSpec grid = grid2d(64);
    const DyadicPartition P = build_partition(grid);
    NoiseModel model;
    model.mode_count = 4;
    model.couplings = {0.02, 0.02, 0.014, 0.014};
    model.prepare(grid);
    const BesovParams besov{0.0, 2.0, 2.0};
    audit_noise_model(model, grid, P, besov, 50, 11);
    SolverConfig cfg;
    cfg.besov = besov;
    cfg.C_star = 5.0;
    cfg.tg = TimeGrid{0.1, static_cast<int>(state.range(0))};
    const SpectralField u0 = random_divfree_field(grid, 3, 0.05, 4.0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        const WienerPath w = sample_wiener(++seed, cfg.tg, model.mode_count);
        benchmark::DoNotOptimize(time_step_path(u0, model, w, cfg, P));
    }
}
BENCHMARK(BM_time_step_path)->Arg(25)->Unit(benchmark::kMillisecond);

}  // namespace
