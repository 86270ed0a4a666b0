#include <benchmark/benchmark.h>

#include "gfat/experiment.hpp"
#include "gfat/fused.hpp"
#include "gfat/softmax.hpp"
#include "gfat/tile.hpp"

namespace {

void bm_cpu_softmax_recompute(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const gfat::Matrix64 z = gfat::gen_matrix(n, n, 1, gfat::InputDist::uniform);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfat::cpu_softmax(z, gfat::CpuSoftmaxMode::recompute));
    }
}

void bm_cpu_softmax_cache(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const gfat::Matrix64 z = gfat::gen_matrix(n, n, 1, gfat::InputDist::uniform);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfat::cpu_softmax(z, gfat::CpuSoftmaxMode::cache));
    }
}

void bm_grid_softmax(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const gfat::TiledMatrix z = gfat::tilize(gfat::gen_matrix(n, n, 1, gfat::InputDist::uniform));
    gfat::CoreGrid grid;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfat::grid_softmax(z, grid, gfat::Scheduler::multi_thread));
    }
}

void bm_fused_attention(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const gfat::TiledMatrix q =
        gfat::tilize(gfat::gen_matrix(n, 128, 1, gfat::InputDist::uniform));
    const gfat::TiledMatrix k =
        gfat::tilize(gfat::gen_matrix(n, 128, 2, gfat::InputDist::uniform));
    gfat::FusedConfig cfg;
    gfat::CoreGrid grid;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfat::fused_attention_weights(q, k, cfg, grid,
                                                               gfat::Scheduler::multi_thread));
    }
}

BENCHMARK(bm_cpu_softmax_recompute)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_cpu_softmax_cache)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_grid_softmax)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fused_attention)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
