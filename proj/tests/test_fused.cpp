#include <doctest.h>

#include <cmath>
#include <random>

#include "gfat/errors.hpp"
#include "gfat/fused.hpp"
#include "gfat/oracle.hpp"
#include "gfat/softmax.hpp"
#include "gfat/tile_ops.hpp"

using namespace gfat;

namespace {

Matrix64 random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix64 m(rows, cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

// Reads the distributed score blocks back into one matrix.
Matrix64 collect_scores(CoreGrid& grid, std::size_t n, const FusedConfig& cfg) {
    const std::size_t n_tiles = n / kTileDim;
    const std::size_t band_r = n_tiles / cfg.subgrid_rows;
    const std::size_t band_c = n_tiles / cfg.subgrid_cols;
    TiledMatrix out(n, n);
    for (int r = 0; r < cfg.subgrid_rows; ++r) {
        for (int c = 0; c < cfg.subgrid_cols; ++c) {
            const auto& tiles = grid.core({r, c}).buffers.at("scores").tiles;
            for (std::size_t i = 0; i < band_r; ++i) {
                for (std::size_t j = 0; j < band_c; ++j) {
                    out.tile(r * band_r + i, c * band_c + j) = tiles[i * band_c + j];
                }
            }
        }
    }
    return untilize(out);
}

void stage_inputs(CoreGrid& grid, const Matrix64& q, const Matrix64& k, std::size_t n) {
    grid.reset();
    grid.add_dram_matrix("fused_q", tilize(q));
    grid.add_dram_matrix("fused_kt", transpose_tiled(tilize(k)));
    grid.add_dram_matrix("fused_out", TiledMatrix(n, n));
}

}  // namespace

TEST_CASE("blocked matmul of the identity") {
    const std::size_t n = 32;
    Matrix64 eye(32, 32);
    for (std::size_t i = 0; i < 32; ++i) eye.at(i, i) = 1.0;
    FusedConfig cfg;
    cfg.d_k = 32;
    cfg.subgrid_rows = 1;
    cfg.subgrid_cols = 1;
    cfg.block_tiles = 1;
    CoreGrid grid;
    stage_inputs(grid, eye, eye, n);
    blocked_matmul(n, cfg, grid);
    // Q = K = I, so S = Q K^T = I.
    CHECK(max_abs_diff(collect_scores(grid, n, cfg), eye) == 0.0);
}

TEST_CASE("blocked matmul matches the float64 oracle on a 2x2 sub-grid") {
    const std::size_t n = 64;
    const Matrix64 q = random_matrix(n, 64, 61);
    const Matrix64 k = random_matrix(n, 64, 62);
    FusedConfig cfg;
    cfg.d_k = 64;
    cfg.subgrid_rows = 2;
    cfg.subgrid_cols = 2;
    CoreGrid grid;
    stage_inputs(grid, q, k, n);
    blocked_matmul(n, cfg, grid);
    const Matrix64 got = collect_scores(grid, n, cfg);
    const Matrix64 want = oracle_matmul_qkt(q, k);
    for (std::size_t i = 0; i < got.data().size(); ++i) {
        const double denom = std::max(1.0, std::abs(want.data()[i]));
        // Inputs carry up to 2^-9 relative rounding each; a 64-term dot
        // product of near-unit values can accumulate a few times that.
        CHECK(std::abs(got.data()[i] - want.data()[i]) / denom <= 3e-2);
    }
}

TEST_CASE("blocked matmul dataflow: 8x4 by 4x8 tiles on a 2x2 grid, block 2") {
    // n = 256 (8 tiles), d_k = 128 (4 tiles): two multicast steps.
    const std::size_t n = 256;
    const Matrix64 q = random_matrix(n, 128, 63);
    const Matrix64 k = random_matrix(n, 128, 64);
    FusedConfig cfg;
    cfg.subgrid_rows = 2;
    cfg.subgrid_cols = 2;
    cfg.block_tiles = 2;
    CoreGrid grid;
    stage_inputs(grid, q, k, n);
    blocked_matmul(n, cfg, grid);

    // The second core of the first column reads the two bottom 4x2 tile
    // blocks of Q: 2 steps x (4 rows x 2 tiles).
    CHECK(grid.core({1, 0}).ledger.get(OpKind::load) == 16);
    // It receives the matching K^T blocks from the core above it.
    CHECK(grid.core({1, 0}).ledger.get(OpKind::multicast_recv) == 16);
    // An interior core receives both input bands in full.
    CHECK(grid.core({1, 1}).ledger.get(OpKind::multicast_recv) == 32);
    // Per-core tile matmul count: (n/32/R) * (n/32/C) * (d_k/32).
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            CHECK(grid.core({r, c}).ledger.get(OpKind::matmul_tile) == 4 * 4 * 4);
        }
    }
    // And the result is the right product.
    CHECK(max_abs_diff(collect_scores(grid, n, cfg), oracle_matmul_qkt(q, k)) <= 1.0);
}

TEST_CASE("score scaling divides by sqrt(d_k)") {
    Tile t;
    for (Bf16Scalar& s : t.data) s = Bf16Scalar::from_f32(11.3137085f);
    tile_scale(t, 1.0f / std::sqrt(128.0f));
    // 11.3137085 / sqrt(128) = 1.0; bf16 rounding lands exactly on 1.
    for (const Bf16Scalar& s : t.data) CHECK(s.to_f32() == 1.0f);

    Tile zeros;
    tile_scale(zeros, 1.0f / std::sqrt(128.0f));
    CHECK(zeros == Tile{});

    Tile id_scale;
    id_scale.at(0, 0) = Bf16Scalar::from_f32(0.718f);
    const Tile before = id_scale;
    tile_scale(id_scale, 1.0f);  // d_k = 1
    CHECK(id_scale == before);
}

TEST_CASE("fused softmax on a 1x1 sub-grid is bit-identical to grid_softmax") {
    const std::size_t n = 64;
    const Matrix64 z = random_matrix(n, n, 71);
    const TiledMatrix in = tilize(z);

    FusedConfig cfg;
    cfg.subgrid_rows = 1;
    cfg.subgrid_cols = 1;
    CoreGrid grid;
    grid.reset();
    Program stage;
    stage.add_phase("inject").on({0, 0}, [&in](CoreContext& ctx) {
        ctx.alloc_buffer("scores", in.tile_rows() * in.tile_cols());
        for (std::size_t ti = 0; ti < in.tile_rows(); ++ti) {
            for (std::size_t tj = 0; tj < in.tile_cols(); ++tj) {
                ctx.push_tile("scores", in.tile(ti, tj));
            }
        }
    });
    grid.run(stage);
    fused_softmax(n, cfg, grid);
    const auto& tiles = grid.core({0, 0}).buffers.at("scores").tiles;

    CoreGrid ref_grid;
    const TiledMatrix want = grid_softmax(in, ref_grid);
    for (std::size_t ti = 0; ti < want.tile_rows(); ++ti) {
        for (std::size_t tj = 0; tj < want.tile_cols(); ++tj) {
            CHECK(tiles[ti * want.tile_cols() + tj] == want.tile(ti, tj));
        }
    }
}

TEST_CASE("fused weights for zero inputs are exactly uniform") {
    const std::size_t n = 64;
    FusedConfig cfg;
    cfg.subgrid_rows = 2;
    cfg.subgrid_cols = 2;
    CoreGrid grid;
    const TiledMatrix out =
        fused_attention_weights(tilize(Matrix64(n, 128)), tilize(Matrix64(n, 128)), cfg, grid);
    const Matrix64 w = untilize(out);
    for (double v : w.data()) CHECK(v == 0.015625);
}

TEST_CASE("fused kernel matches the attention oracle") {
    const std::size_t n = 256;
    const Matrix64 q = random_matrix(n, 128, 73);
    const Matrix64 k = random_matrix(n, 128, 74);
    FusedConfig cfg;
    cfg.subgrid_rows = 2;
    cfg.subgrid_cols = 2;
    CoreGrid grid;
    const Matrix64 got = untilize(fused_attention_weights(tilize(q), tilize(k), cfg, grid));
    CHECK(max_abs_diff(got, oracle_attention_weights(q, k, 128)) <= kBf16Tolerance);
    for (std::size_t i = 0; i < got.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < got.cols(); ++j) sum += got.at(i, j);
        CHECK(std::abs(sum - 1.0) <= 1e-2);
    }
}

TEST_CASE("global reductions are redundantly identical across a core row") {
    const std::size_t n = 128;
    const Matrix64 q = random_matrix(n, 128, 75);
    const Matrix64 k = random_matrix(n, 128, 76);
    FusedConfig cfg;
    cfg.subgrid_rows = 2;
    cfg.subgrid_cols = 4;
    CoreGrid grid;
    fused_attention_weights(tilize(q), tilize(k), cfg, grid, Scheduler::multi_thread);
    for (int r = 0; r < cfg.subgrid_rows; ++r) {
        const auto& max0 = grid.core({r, 0}).published.at("global_max");
        const auto& sum0 = grid.core({r, 0}).published.at("global_sum");
        for (int c = 1; c < cfg.subgrid_cols; ++c) {
            CHECK(grid.core({r, c}).published.at("global_max") == max0);
            CHECK(grid.core({r, c}).published.at("global_sum") == sum0);
        }
    }
}

TEST_CASE("no DRAM writes before the final writeback") {
    const std::size_t n = 128;
    FusedConfig cfg;
    cfg.subgrid_rows = 2;
    cfg.subgrid_cols = 2;
    CoreGrid grid;
    fused_attention_weights(tilize(random_matrix(n, 128, 77)), tilize(random_matrix(n, 128, 78)),
                            cfg, grid);
    REQUIRE_FALSE(grid.dram_write_log().empty());
    for (const DramWrite& w : grid.dram_write_log()) {
        CHECK(w.phase == "writeback");
        CHECK(w.matrix == "fused_out");
    }
    CHECK(grid.dram_write_log().size() == (n / 32) * (n / 32));
}

TEST_CASE("fused equals the unfused sequence within bf16 tolerance") {
    const std::size_t n = 128;
    const Matrix64 q = random_matrix(n, 128, 79);
    const Matrix64 k = random_matrix(n, 128, 80);
    FusedConfig cfg;
    cfg.subgrid_rows = 2;
    cfg.subgrid_cols = 2;
    CoreGrid grid;
    const Matrix64 fused = untilize(fused_attention_weights(tilize(q), tilize(k), cfg, grid));

    // Unfused route: oracle matmul, scale, then the dedicated grid softmax.
    Matrix64 scores = oracle_matmul_qkt(q, k);
    for (double& v : scores.data()) v /= std::sqrt(128.0);
    CoreGrid grid2;
    const Matrix64 unfused = untilize(grid_softmax(tilize(scores), grid2));
    CHECK(max_abs_diff(fused, unfused) <= kBf16Tolerance);
}

TEST_CASE("capacity bound is enforced before any computation") {
    // n = 8192 on 8x8: the per-core slice alone is 1024 tiles.
    FusedConfig cfg;
    CHECK(fused_tiles_needed(8192, cfg) > GridConfig{}.usable_tiles());
    CHECK(fused_tiles_needed(4096, cfg) == 256 + 2 * (16 + 16));
    CHECK(fused_tiles_needed(4096, cfg) <= GridConfig{}.usable_tiles());

    CoreGrid grid;
    CHECK_THROWS_AS(fused_attention_weights(TiledMatrix(8192, 128), TiledMatrix(8192, 128), cfg,
                                            grid),
                    SramOverflow);
    CHECK(grid.dram_write_log().empty());
}

TEST_CASE("fused kernel rejects bad shapes") {
    FusedConfig cfg;
    CoreGrid grid;
    // n/32 not divisible by the sub-grid
    CHECK_THROWS_AS(fused_attention_weights(TiledMatrix(96, 128), TiledMatrix(96, 128), cfg, grid),
                    DimensionError);
    // d_k mismatch
    CHECK_THROWS_AS(fused_attention_weights(TiledMatrix(256, 64), TiledMatrix(256, 64), cfg, grid),
                    DimensionError);
}

TEST_CASE("transpose_tiled is a bitwise transpose") {
    const Matrix64 m = random_matrix(64, 96, 81);
    const TiledMatrix t = tilize(m);
    const TiledMatrix tt = transpose_tiled(t);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            CHECK(tt.tile(j / 32, i / 32).at(j % 32, i % 32) ==
                  t.tile(i / 32, j / 32).at(i % 32, j % 32));
        }
    }
}
