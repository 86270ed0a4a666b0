#include "gfat/softmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gfat/errors.hpp"
#include "gfat/tile_ops.hpp"

namespace gfat {

Matrix64 cpu_softmax(const Matrix64& z, CpuSoftmaxMode mode, CpuSoftmaxStats* stats) {
    if (!z.all_finite()) throw NonFiniteInput("cpu_softmax: input contains NaN or Inf");
    Matrix64 out(z.rows(), z.cols());
    std::uint64_t exp_evals = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < z.cols(); ++j) row_max = std::max(row_max, z.at(i, j));
        double row_sum = 0.0;
        if (mode == CpuSoftmaxMode::cache) {
            for (std::size_t j = 0; j < z.cols(); ++j) {
                const double e = std::exp(z.at(i, j) - row_max);
                ++exp_evals;
                out.at(i, j) = e;
                row_sum += e;
            }
            for (std::size_t j = 0; j < z.cols(); ++j) out.at(i, j) /= row_sum;
        } else {
            for (std::size_t j = 0; j < z.cols(); ++j) {
                row_sum += std::exp(z.at(i, j) - row_max);
                ++exp_evals;
            }
            for (std::size_t j = 0; j < z.cols(); ++j) {
                out.at(i, j) = std::exp(z.at(i, j) - row_max) / row_sum;
                ++exp_evals;
            }
        }
    }
    if (stats) stats->exp_evals += exp_evals;
    return out;
}

RowAssignment distribute_rows(std::size_t n_tile_rows, std::size_t n_cores) {
    RowAssignment a;
    if (n_cores == 0) throw SpecError("distribute_rows: n_cores must be >= 1");
    a.min_rows_per_core = n_tile_rows / n_cores;
    a.n_cores_plus_one = n_tile_rows % n_cores;
    a.rows_per_core.resize(n_cores);
    for (std::size_t i = 0; i < n_cores; ++i) {
        a.rows_per_core[i] = a.min_rows_per_core + (i < a.n_cores_plus_one ? 1 : 0);
    }
    return a;
}

bool max_softmax_rows_check(std::size_t cols, const GridConfig& cfg) {
    return cols <= cfg.sram_usable_tiles * kTileDim;
}

TiledMatrix grid_softmax(const TiledMatrix& z, CoreGrid& grid, Scheduler sched) {
    if (!all_finite(z)) throw NonFiniteInput("grid_softmax: input contains NaN or Inf");
    const GridConfig& cfg = grid.config();
    const std::size_t row_tiles = z.tile_cols();
    const std::size_t n_cores = static_cast<std::size_t>(cfg.compute_cores());
    const RowAssignment assign = distribute_rows(z.tile_rows(), n_cores);

    grid.reset_cores();
    grid.add_dram_matrix("softmax_in", z);
    grid.add_dram_matrix("softmax_out", TiledMatrix(z.rows(), z.cols()));

    // First tile row handled by each core, in row-major core order.
    std::vector<std::size_t> first_row(n_cores, 0);
    for (std::size_t i = 1; i < n_cores; ++i) {
        first_row[i] = first_row[i - 1] + assign.rows_for(i - 1);
    }

    Program program;
    Program::Phase& phase = program.add_phase("softmax");
    for (std::size_t ci = 0; ci < n_cores; ++ci) {
        const std::size_t n_rows = assign.rows_for(ci);
        if (n_rows == 0) continue;
        const Coord coord{static_cast<int>(ci / cfg.grid_cols), static_cast<int>(ci % cfg.grid_cols)};
        const std::size_t row0 = first_row[ci];
        phase.on(coord, [row0, n_rows, row_tiles, &cfg](CoreContext& ctx) {
            ctx.alloc_buffer("row", row_tiles);
            for (std::size_t r = 0; r < n_rows; ++r) {
                const std::size_t tr = row0 + r;
                auto& buf = ctx.buffer("row");
                buf.tiles.clear();
                for (std::size_t tc = 0; tc < row_tiles; ++tc) {
                    ctx.push_tile("row", ctx.dram("softmax_in").tile(tr, tc));
                }
                ctx.ledger().add(OpKind::load,
                                 row_tiles + (r == 0 ? cfg.first_load_surcharge : 0));

                std::span<Tile> row(buf.tiles);
                float row_max[kTileDim];
                std::fill_n(row_max, kTileDim, -std::numeric_limits<float>::infinity());
                tile_row_max(row, row_max);
                ctx.ledger().add(OpKind::reduce_max, row_tiles);

                tile_row_subtract(row, row_max);
                ctx.ledger().add(OpKind::subtract, row_tiles);

                tile_row_exp(row);
                ctx.ledger().add(OpKind::exponentiate, row_tiles);

                float row_sum[kTileDim] = {};
                tile_row_sum(row, row_sum);
                ctx.ledger().add(OpKind::reduce_sum, row_tiles);

                tile_row_normalize(row, row_sum);
                ctx.ledger().add(OpKind::normalize, row_tiles);

                for (std::size_t tc = 0; tc < row_tiles; ++tc) {
                    ctx.dram_write_tile("softmax_out", tr, tc, buf.tiles[tc]);
                }
                const std::size_t surcharge =
                    cfg.write_row_surcharge
                        ? static_cast<std::size_t>(cfg.compute_rows - ctx.coord().row)
                        : 1;
                ctx.ledger().add(OpKind::write, row_tiles * surcharge);
            }
            ctx.free_buffer("row");
        });
    }
    grid.run(program, sched);
    return grid.dram_matrix("softmax_out");
}

}  // namespace gfat
