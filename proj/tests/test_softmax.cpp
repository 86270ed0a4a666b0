#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gfat/errors.hpp"
#include "gfat/oracle.hpp"
#include "gfat/softmax.hpp"
#include "gfat/tile.hpp"

using namespace gfat;

namespace {

Matrix64 random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix64 m(rows, cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

}  // namespace

TEST_CASE("cpu_softmax basics") {
    Matrix64 z(1, 4);
    const Matrix64 out = cpu_softmax(z, CpuSoftmaxMode::cache);
    for (double v : out.data()) CHECK(v == 0.25);
}

TEST_CASE("cpu_softmax survives large inputs via max subtraction") {
    Matrix64 z(1, 2);
    z.at(0, 0) = 1000.0;
    z.at(0, 1) = 1000.0;
    const Matrix64 out = cpu_softmax(z, CpuSoftmaxMode::recompute);
    CHECK(out.at(0, 0) == 0.5);
    CHECK(out.at(0, 1) == 0.5);
}

TEST_CASE("cpu_softmax rejects non-finite input") {
    Matrix64 z(1, 2);
    z.at(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(cpu_softmax(z, CpuSoftmaxMode::cache), NonFiniteInput);
}

TEST_CASE("recompute and cache modes agree bit-exactly, at twice the exp count") {
    const Matrix64 z = random_matrix(64, 64, 31);
    CpuSoftmaxStats recompute_stats, cache_stats;
    const Matrix64 a = cpu_softmax(z, CpuSoftmaxMode::recompute, &recompute_stats);
    const Matrix64 b = cpu_softmax(z, CpuSoftmaxMode::cache, &cache_stats);
    CHECK(a == b);
    CHECK(cache_stats.exp_evals == 64 * 64);
    CHECK(recompute_stats.exp_evals == 2 * cache_stats.exp_evals);
}

TEST_CASE("distribute_rows matches the published core counts") {
    SUBCASE("128 tile rows on 108 cores") {
        const RowAssignment a = distribute_rows(128, 108);
        CHECK(a.min_rows_per_core == 1);
        CHECK(a.n_cores_plus_one == 20);
        CHECK(a.rows_for(0) == 2);
        CHECK(a.rows_for(19) == 2);
        CHECK(a.rows_for(20) == 1);
    }
    SUBCASE("256 tile rows on 108 cores") {
        const RowAssignment a = distribute_rows(256, 108);
        CHECK(a.min_rows_per_core == 2);
        CHECK(a.n_cores_plus_one == 40);
    }
    SUBCASE("exact division") {
        const RowAssignment a = distribute_rows(10, 10);
        CHECK(a.min_rows_per_core == 1);
        CHECK(a.n_cores_plus_one == 0);
    }
}

TEST_CASE("row assignment partitions the rows") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t rows = 1 + rng() % 1024;
        const std::size_t cores = 1 + rng() % 108;
        const RowAssignment a = distribute_rows(rows, cores);
        std::size_t sum = 0;
        for (std::size_t i = 0; i < cores; ++i) {
            const std::size_t r = a.rows_for(i);
            sum += r;
            const bool larger = i < a.n_cores_plus_one;
            CHECK(r == a.min_rows_per_core + (larger ? 1 : 0));
        }
        CHECK(sum == rows);
    }
}

TEST_CASE("max row length check") {
    const GridConfig cfg;
    CHECK(max_softmax_rows_check(15616, cfg));
    CHECK_FALSE(max_softmax_rows_check(15648, cfg));
    CHECK(max_softmax_rows_check(32, cfg));
}

TEST_CASE("grid_softmax of zeros is exactly uniform") {
    CoreGrid grid;
    const TiledMatrix out = grid_softmax(tilize(Matrix64(32, 32)), grid);
    for (const Bf16Scalar& s : out.tile(0, 0).data) {
        CHECK(s.to_f32() == 0.03125f);
    }
}

TEST_CASE("grid_softmax matches the float64 baseline") {
    const Matrix64 z = random_matrix(256, 256, 41);
    CoreGrid grid;
    const Matrix64 got = untilize(grid_softmax(tilize(z), grid));
    const Matrix64 want = cpu_softmax(z, CpuSoftmaxMode::cache);
    CHECK(max_abs_diff(got, want) <= kBf16Tolerance);
    for (std::size_t i = 0; i < got.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < got.cols(); ++j) sum += got.at(i, j);
        CHECK(std::abs(sum - 1.0) <= 1e-2);
    }
}

TEST_CASE("grid_softmax rejects non-finite input") {
    Matrix64 z(32, 32);
    z.at(3, 3) = std::numeric_limits<double>::quiet_NaN();
    CoreGrid grid;
    CHECK_THROWS_AS(grid_softmax(tilize(z), grid), NonFiniteInput);
}

TEST_CASE("grid_softmax row overrunning SRAM raises SramOverflow") {
    CoreGrid grid;
    CHECK_THROWS_AS(grid_softmax(TiledMatrix(32, 15648), grid), SramOverflow);
}

TEST_CASE("grid_softmax ledger reflects the row assignment") {
    // 128 tile rows; tile columns do not matter for the assignment.
    const Matrix64 z = random_matrix(4096, 64, 43);
    CoreGrid grid;
    grid_softmax(tilize(z), grid, Scheduler::multi_thread);
    const GridConfig& cfg = grid.config();
    const std::size_t row_tiles = 2;  // 64 cols
    for (int i = 0; i < cfg.compute_cores(); ++i) {
        const Coord coord{i / cfg.grid_cols, i % cfg.grid_cols};
        const std::size_t rows = i < 20 ? 2 : 1;
        CHECK(grid.core(coord).ledger.get(OpKind::reduce_max) == rows * row_tiles);
        CHECK(grid.core(coord).ledger.get(OpKind::exponentiate) == rows * row_tiles);
    }
}

TEST_CASE("grid_softmax preserves the per-row argmax") {
    const Matrix64 z = random_matrix(96, 96, 47);
    CoreGrid grid;
    const TiledMatrix in = tilize(z);
    const Matrix64 got = untilize(grid_softmax(in, grid));
    const Matrix64 zin = untilize(in);  // what the kernel actually saw
    for (std::size_t i = 0; i < zin.rows(); ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < zin.cols(); ++j) {
            if (zin.at(i, j) > zin.at(i, arg)) arg = j;
        }
        double out_max = got.at(i, 0);
        for (std::size_t j = 1; j < got.cols(); ++j) out_max = std::max(out_max, got.at(i, j));
        // the input argmax position attains the output row maximum (ties
        // allowed: bf16 is coarser after exp/normalize)
        CHECK(got.at(i, arg) == out_max);
    }
}

TEST_CASE("grid_softmax is deterministic across schedulers") {
    const Matrix64 z = random_matrix(128, 128, 53);
    const TiledMatrix in = tilize(z);
    CoreGrid g1, g2;
    const TiledMatrix a = grid_softmax(in, g1, Scheduler::single_thread);
    const TiledMatrix b = grid_softmax(in, g2, Scheduler::multi_thread);
    CHECK(a == b);
    for (int r = 0; r < 9; ++r) {
        for (int c = 0; c < 12; ++c) {
            CHECK(g1.core({r, c}).ledger == g2.core({r, c}).ledger);
        }
    }
}

TEST_CASE("write surcharge scales write counts by grid row") {
    GridConfig cfg;
    cfg.write_row_surcharge = true;
    CoreGrid grid(cfg);
    // 216 tile rows: every compute core gets exactly 2 rows of 1 tile.
    grid_softmax(TiledMatrix(216 * 32, 32), grid);
    CHECK(grid.core({0, 0}).ledger.get(OpKind::write) == 2 * 9);
    CHECK(grid.core({8, 0}).ledger.get(OpKind::write) == 2 * 1);
}
