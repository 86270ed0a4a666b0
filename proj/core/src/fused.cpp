#include "gfat/fused.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gfat/errors.hpp"
#include "gfat/tile_ops.hpp"

namespace gfat {

void FusedConfig::validate(std::size_t n, const GridConfig& grid) const {
    if (d_k == 0 || d_k % kTileDim != 0) {
        throw DimensionError("d_k must be a positive multiple of 32");
    }
    if (subgrid_rows < 1 || subgrid_cols < 1 || subgrid_rows > grid.compute_rows ||
        subgrid_cols > grid.grid_cols) {
        throw DimensionError("sub-grid does not fit the compute region");
    }
    if (n == 0 || n % kTileDim != 0) {
        throw DimensionError("n must be a positive multiple of 32");
    }
    const std::size_t n_tiles = n / kTileDim;
    if (n_tiles % static_cast<std::size_t>(subgrid_rows) != 0 ||
        n_tiles % static_cast<std::size_t>(subgrid_cols) != 0) {
        throw DimensionError("n/32 must be divisible by the sub-grid dimensions");
    }
    if (block_tiles == 0 || (d_k / kTileDim) % block_tiles != 0) {
        throw DimensionError("d_k/32 must be divisible by block_tiles");
    }
}

TiledMatrix transpose_tiled(const TiledMatrix& m) {
    TiledMatrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out.tile(j / kTileDim, i / kTileDim).at(j % kTileDim, i % kTileDim) =
                m.tile(i / kTileDim, j / kTileDim).at(i % kTileDim, j % kTileDim);
        }
    }
    return out;
}

namespace {

struct Partition {
    std::size_t n_tiles;   // n / 32
    std::size_t band_r;    // tile rows per core
    std::size_t band_c;    // tile cols per core
    std::size_t dk_tiles;  // d_k / 32
    std::size_t steps;     // multicast steps along d_k
};

Partition make_partition(std::size_t n, const FusedConfig& cfg) {
    Partition p;
    p.n_tiles = n / kTileDim;
    p.band_r = p.n_tiles / static_cast<std::size_t>(cfg.subgrid_rows);
    p.band_c = p.n_tiles / static_cast<std::size_t>(cfg.subgrid_cols);
    p.dk_tiles = cfg.d_k / kTileDim;
    p.steps = p.dk_tiles / cfg.block_tiles;
    return p;
}

template <typename Fn>
void for_each_subgrid_core(const FusedConfig& cfg, Fn&& fn) {
    for (int r = 0; r < cfg.subgrid_rows; ++r) {
        for (int c = 0; c < cfg.subgrid_cols; ++c) {
            fn(Coord{r, c});
        }
    }
}

}  // namespace

std::size_t fused_tiles_needed(std::size_t n, const FusedConfig& cfg) {
    const Partition p = make_partition(n, cfg);
    return p.band_r * p.band_c + cfg.block_tiles * (p.band_r + p.band_c);
}

void blocked_matmul(std::size_t n, const FusedConfig& cfg, CoreGrid& grid, Scheduler sched) {
    const Partition p = make_partition(n, cfg);
    // Dest-register accumulators, f32 across all blocks of the inner
    // dimension; rounded to bf16 once when the scores are stored.
    auto acc = std::make_shared<std::vector<std::vector<float>>>(
        static_cast<std::size_t>(cfg.subgrid_rows * cfg.subgrid_cols));

    Program program;
    Program::Phase& setup = program.add_phase("matmul_setup");
    for_each_subgrid_core(cfg, [&](Coord coord) {
        const std::size_t idx =
            static_cast<std::size_t>(coord.row) * cfg.subgrid_cols + coord.col;
        setup.on(coord, [idx, &cfg, p, acc](CoreContext& ctx) {
            ctx.alloc_buffer("scores", p.band_r * p.band_c);
            ctx.alloc_buffer("a_in", p.band_r * cfg.block_tiles);
            ctx.alloc_buffer("b_in", cfg.block_tiles * p.band_c);
            (*acc)[idx].assign(p.band_r * p.band_c * kTileScalars, 0.0f);
        });
    });

    for (std::size_t step = 0; step < p.steps; ++step) {
        const std::size_t k0 = step * cfg.block_tiles;
        const std::string suffix = std::to_string(step);

        // First column streams blocks of Q across rows, first row streams
        // blocks of K^T down columns. Core (0,0) does both in one job so no
        // core appears twice in a phase.
        auto send_a = [k0, &cfg, p](CoreContext& ctx) {
            const std::size_t row0 = static_cast<std::size_t>(ctx.coord().row) * p.band_r;
            std::vector<Tile> block;
            block.reserve(p.band_r * cfg.block_tiles);
            for (std::size_t i = 0; i < p.band_r; ++i) {
                for (std::size_t kk = 0; kk < cfg.block_tiles; ++kk) {
                    block.push_back(ctx.dram("fused_q").tile(row0 + i, k0 + kk));
                }
            }
            for (const Tile& t : block) ctx.push_tile("a_in", t);
            ctx.ledger().add(OpKind::load, block.size());
            ctx.multicast_row("a_in", block, cfg.subgrid_cols);
        };
        auto send_b = [k0, &cfg, p](CoreContext& ctx) {
            const std::size_t col0 = static_cast<std::size_t>(ctx.coord().col) * p.band_c;
            std::vector<Tile> block;
            block.reserve(cfg.block_tiles * p.band_c);
            for (std::size_t kk = 0; kk < cfg.block_tiles; ++kk) {
                for (std::size_t j = 0; j < p.band_c; ++j) {
                    block.push_back(ctx.dram("fused_kt").tile(k0 + kk, col0 + j));
                }
            }
            for (const Tile& t : block) ctx.push_tile("b_in", t);
            ctx.ledger().add(OpKind::load, block.size());
            ctx.multicast_col("b_in", block, cfg.subgrid_rows);
        };
        Program::Phase& mc = program.add_phase("multicast_" + suffix);
        for_each_subgrid_core(cfg, [&](Coord coord) {
            if (coord.row == 0 && coord.col == 0) {
                mc.on(coord, [send_a, send_b](CoreContext& ctx) {
                    send_a(ctx);
                    send_b(ctx);
                });
            } else if (coord.col == 0) {
                mc.on(coord, send_a);
            } else if (coord.row == 0) {
                mc.on(coord, send_b);
            }
        });

        Program::Phase& compute = program.add_phase("compute_" + suffix);
        for_each_subgrid_core(cfg, [&](Coord coord) {
            const std::size_t idx =
                static_cast<std::size_t>(coord.row) * cfg.subgrid_cols + coord.col;
            compute.on(coord, [idx, &cfg, p, acc](CoreContext& ctx) {
                auto& a_in = ctx.buffer("a_in").tiles;
                auto& b_in = ctx.buffer("b_in").tiles;
                std::vector<float>& out = (*acc)[idx];
                for (std::size_t i = 0; i < p.band_r; ++i) {
                    for (std::size_t j = 0; j < p.band_c; ++j) {
                        float* tile_acc = out.data() + (i * p.band_c + j) * kTileScalars;
                        for (std::size_t kk = 0; kk < cfg.block_tiles; ++kk) {
                            tile_matmul_acc(a_in[i * cfg.block_tiles + kk],
                                            b_in[kk * p.band_c + j], tile_acc);
                        }
                    }
                }
                ctx.ledger().add(OpKind::matmul_tile, p.band_r * p.band_c * cfg.block_tiles);
                a_in.clear();
                b_in.clear();
            });
        });
    }

    Program::Phase& store = program.add_phase("store_scores");
    for_each_subgrid_core(cfg, [&](Coord coord) {
        const std::size_t idx =
            static_cast<std::size_t>(coord.row) * cfg.subgrid_cols + coord.col;
        store.on(coord, [idx, p, acc](CoreContext& ctx) {
            std::vector<float>& out = (*acc)[idx];
            for (std::size_t t = 0; t < p.band_r * p.band_c; ++t) {
                ctx.push_tile("scores", tile_from_f32(out.data() + t * kTileScalars));
            }
            out.clear();
            ctx.free_buffer("a_in");
            ctx.free_buffer("b_in");
        });
    });

    grid.run(program, sched);
}

void scale_scores(std::size_t n, const FusedConfig& cfg, CoreGrid& grid, Scheduler sched) {
    const Partition p = make_partition(n, cfg);
    const float factor = 1.0f / std::sqrt(static_cast<float>(cfg.d_k));
    Program program;
    Program::Phase& phase = program.add_phase("scale");
    for_each_subgrid_core(cfg, [&](Coord coord) {
        phase.on(coord, [factor, p](CoreContext& ctx) {
            for (Tile& t : ctx.buffer("scores").tiles) tile_scale(t, factor);
            ctx.ledger().add(OpKind::scale, p.band_r * p.band_c);
        });
    });
    grid.run(program, sched);
}

void fused_softmax(std::size_t n, const FusedConfig& cfg, CoreGrid& grid, Scheduler sched) {
    const Partition p = make_partition(n, cfg);
    const std::size_t slice_tiles = p.band_r * p.band_c;
    const std::size_t stat_len = p.band_r * kTileDim;
    const int peers = cfg.subgrid_cols - 1;

    Program program;

    Program::Phase& local_max = program.add_phase("local_max");
    for_each_subgrid_core(cfg, [&](Coord coord) {
        local_max.on(coord, [p, stat_len](CoreContext& ctx) {
            auto& scores = ctx.buffer("scores").tiles;
            std::vector<float> stats(stat_len, -std::numeric_limits<float>::infinity());
            for (std::size_t i = 0; i < p.band_r; ++i) {
                tile_row_max(std::span<const Tile>(scores.data() + i * p.band_c, p.band_c),
                             stats.data() + i * kTileDim);
            }
            ctx.ledger().add(OpKind::reduce_max, p.band_r * p.band_c);
            ctx.publish("local_max", std::move(stats));
        });
    });

    // Every core assembles the global maxima redundantly from its row peers,
    // folding in core-column order so all copies are bit-identical.
    Program::Phase& exp_phase = program.add_phase("exp_local_sum");
    for_each_subgrid_core(cfg, [&](Coord coord) {
        exp_phase.on(coord, [&cfg, p, stat_len, peers, slice_tiles](CoreContext& ctx) {
            std::vector<float> global_max(stat_len, -std::numeric_limits<float>::infinity());
            for (int c = 0; c < cfg.subgrid_cols; ++c) {
                const std::vector<float>& local =
                    ctx.peer_published({ctx.coord().row, c}, "local_max");
                for (std::size_t i = 0; i < stat_len; ++i) {
                    global_max[i] = std::max(global_max[i], local[i]);
                }
            }
            ctx.ledger().add(OpKind::xcore_reduce, static_cast<std::uint64_t>(peers));

            auto& scores = ctx.buffer("scores").tiles;
            for (std::size_t i = 0; i < p.band_r; ++i) {
                tile_row_subtract(std::span<Tile>(scores.data() + i * p.band_c, p.band_c),
                                  global_max.data() + i * kTileDim);
            }
            ctx.ledger().add(OpKind::subtract, slice_tiles);

            tile_row_exp(std::span<Tile>(scores));
            ctx.ledger().add(OpKind::exponentiate, slice_tiles);

            std::vector<float> local_sum(stat_len, 0.0f);
            for (std::size_t i = 0; i < p.band_r; ++i) {
                tile_row_sum(std::span<const Tile>(scores.data() + i * p.band_c, p.band_c),
                             local_sum.data() + i * kTileDim);
            }
            ctx.ledger().add(OpKind::reduce_sum, slice_tiles);

            ctx.publish("global_max", std::move(global_max));
            ctx.publish("local_sum", std::move(local_sum));
        });
    });

    Program::Phase& norm_phase = program.add_phase("normalize");
    for_each_subgrid_core(cfg, [&](Coord coord) {
        norm_phase.on(coord, [&cfg, p, stat_len, peers, slice_tiles](CoreContext& ctx) {
            std::vector<float> global_sum(stat_len, 0.0f);
            for (int c = 0; c < cfg.subgrid_cols; ++c) {
                const std::vector<float>& local =
                    ctx.peer_published({ctx.coord().row, c}, "local_sum");
                for (std::size_t i = 0; i < stat_len; ++i) global_sum[i] += local[i];
            }
            ctx.ledger().add(OpKind::xcore_reduce, static_cast<std::uint64_t>(peers));

            auto& scores = ctx.buffer("scores").tiles;
            for (std::size_t i = 0; i < p.band_r; ++i) {
                tile_row_normalize(std::span<Tile>(scores.data() + i * p.band_c, p.band_c),
                                   global_sum.data() + i * kTileDim);
            }
            ctx.ledger().add(OpKind::normalize, slice_tiles);
            ctx.publish("global_sum", std::move(global_sum));
        });
    });

    grid.run(program, sched);
}

TiledMatrix fused_attention_weights(const TiledMatrix& q, const TiledMatrix& k,
                                    const FusedConfig& cfg, CoreGrid& grid, Scheduler sched) {
    if (q.cols() != cfg.d_k || k.cols() != cfg.d_k) {
        throw DimensionError("Q/K column count does not match d_k");
    }
    if (q.rows() != k.rows()) throw DimensionError("Q and K must have the same row count");
    if (!all_finite(q) || !all_finite(k)) {
        throw NonFiniteInput("fused kernel: input contains NaN or Inf");
    }
    const std::size_t n = q.rows();
    cfg.validate(n, grid.config());

    // Capacity bound, checked before any computation.
    const std::size_t needed = fused_tiles_needed(n, cfg);
    if (needed > grid.config().usable_tiles()) {
        throw SramOverflow("fused kernel needs " + std::to_string(needed) +
                           " tiles per core, budget is " +
                           std::to_string(grid.config().usable_tiles()));
    }

    grid.reset();
    grid.add_dram_matrix("fused_q", q);
    grid.add_dram_matrix("fused_kt", transpose_tiled(k));
    grid.add_dram_matrix("fused_out", TiledMatrix(n, n));

    blocked_matmul(n, cfg, grid, sched);
    scale_scores(n, cfg, grid, sched);
    fused_softmax(n, cfg, grid, sched);

    const Partition p = make_partition(n, cfg);
    Program writeback;
    Program::Phase& phase = writeback.add_phase("writeback");
    for_each_subgrid_core(cfg, [&](Coord coord) {
        const std::size_t row0 = static_cast<std::size_t>(coord.row) * p.band_r;
        const std::size_t col0 = static_cast<std::size_t>(coord.col) * p.band_c;
        phase.on(coord, [row0, col0, p](CoreContext& ctx) {
            auto& scores = ctx.buffer("scores").tiles;
            for (std::size_t i = 0; i < p.band_r; ++i) {
                for (std::size_t j = 0; j < p.band_c; ++j) {
                    ctx.dram_write_tile("fused_out", row0 + i, col0 + j,
                                        scores[i * p.band_c + j]);
                }
            }
            const GridConfig& gcfg = ctx.config();
            const std::size_t surcharge =
                gcfg.write_row_surcharge
                    ? static_cast<std::size_t>(gcfg.compute_rows - ctx.coord().row)
                    : 1;
            ctx.ledger().add(OpKind::write, p.band_r * p.band_c * surcharge);
            ctx.free_buffer("scores");
        });
    });
    grid.run(writeback, sched);

    return grid.dram_matrix("fused_out");
}

}  // namespace gfat
