#pragma once

#include <cstddef>

#include "gfat/grid.hpp"
#include "gfat/tile.hpp"

namespace gfat {

// Placement and blocking for the fused matmul + scaling + softmax kernel.
// The sub-grid sits at the top-left of the compute region; the n x n score
// matrix is partitioned evenly over it.
struct FusedConfig {
    std::size_t d_k = 128;
    int subgrid_rows = 8;
    int subgrid_cols = 8;
    // Tiles per multicast step along the inner (d_k) dimension.
    std::size_t block_tiles = 2;

    void validate(std::size_t n, const GridConfig& grid) const;
};

// Bitwise transpose of a tiled matrix (host-side; K is stored pre-transposed
// so the left/top dataflow applies unchanged).
TiledMatrix transpose_tiled(const TiledMatrix& m);

// Tile buffers a fused-kernel core needs resident at once: its output slice
// plus one streaming block of each input.
std::size_t fused_tiles_needed(std::size_t n, const FusedConfig& cfg);

// Stage 1: blocked multicast matmul of Q (n x d_k) against K^T (d_k x n),
// read from DRAM matrices "fused_q" / "fused_kt". Leaves the (r,c) output
// block of S = Q K^T resident in each core's "scores" buffer.
void blocked_matmul(std::size_t n, const FusedConfig& cfg, CoreGrid& grid,
                    Scheduler sched = Scheduler::single_thread);

// Stage 2: elementwise multiply of the resident scores by 1/sqrt(d_k).
void scale_scores(std::size_t n, const FusedConfig& cfg, CoreGrid& grid,
                  Scheduler sched = Scheduler::single_thread);

// Stage 3: distributed softmax over the resident scores. Local row
// reductions per core, global reductions assembled redundantly on every
// core of a core row (two barriers: post-local-max, post-local-sum).
void fused_softmax(std::size_t n, const FusedConfig& cfg, CoreGrid& grid,
                   Scheduler sched = Scheduler::single_thread);

// Full pipeline: ingest Q and K (each n x d_k), run the three stages and a
// final per-core writeback. No intermediate is written to DRAM between
// stages. Checks the SRAM capacity bound before any computation.
TiledMatrix fused_attention_weights(const TiledMatrix& q, const TiledMatrix& k,
                                    const FusedConfig& cfg, CoreGrid& grid,
                                    Scheduler sched = Scheduler::single_thread);

}  // namespace gfat
