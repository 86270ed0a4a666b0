#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gfat/grid.hpp"
#include "gfat/matrix.hpp"
#include "gfat/tile.hpp"

namespace gfat {

// Per-element absolute tolerance for comparing bf16 grid kernel outputs
// against the float64 reference. Derived from the 7-bit mantissa (2^-8
// relative on values <= 1) plus accumulation slack.
inline constexpr double kBf16Tolerance = 1e-2;

enum class CpuSoftmaxMode { recompute, cache };

struct CpuSoftmaxStats {
    std::uint64_t exp_evals = 0;
};

// Row-wise stable softmax baseline (max subtraction). Both modes produce
// bit-identical output; they differ only in how many exponential
// evaluations they perform (cache evaluates each once, recompute twice).
Matrix64 cpu_softmax(const Matrix64& z, CpuSoftmaxMode mode, CpuSoftmaxStats* stats = nullptr);

// Division-with-remainder distribution of tile rows over compute cores in
// row-major core order; the first n_cores_plus_one cores get one extra row.
struct RowAssignment {
    std::size_t min_rows_per_core = 0;
    std::size_t n_cores_plus_one = 0;
    std::vector<std::size_t> rows_per_core;

    std::size_t rows_for(std::size_t core_index) const { return rows_per_core[core_index]; }
};

RowAssignment distribute_rows(std::size_t n_tile_rows, std::size_t n_cores);

// True iff a row of `cols` scalars fits the per-core SRAM budget.
bool max_softmax_rows_check(std::size_t cols, const GridConfig& cfg);

// Multi-core softmax: tile rows are distributed over the compute cores;
// each core loads a row of tiles, reduces, subtracts, exponentiates, sums,
// normalizes and writes back, recording every phase in its ledger.
TiledMatrix grid_softmax(const TiledMatrix& z, CoreGrid& grid,
                         Scheduler sched = Scheduler::single_thread);

}  // namespace gfat
