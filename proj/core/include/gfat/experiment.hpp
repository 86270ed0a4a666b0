#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfat/grid.hpp"
#include "gfat/matrix.hpp"

namespace gfat {

enum class KernelKind { cpu_softmax_recompute, cpu_softmax_cache, grid_softmax, fused };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

enum class InputDist { uniform, zeros };

// Deterministic input generator; the oracle and the kernel consume the same
// matrix. Uniform entries are drawn from [-1, 1] by one mt19937_64 stream
// filling row-major.
Matrix64 gen_matrix(std::size_t n, std::size_t d, std::uint64_t seed, InputDist dist);

struct ExperimentSpec {
    std::string name;
    KernelKind kernel = KernelKind::grid_softmax;
    std::vector<std::size_t> sizes;
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    std::string grid_config_path;   // empty: defaults
    std::string weight_table_path;  // empty: no weighted column
    InputDist dist = InputDist::uniform;
    // Fused-kernel parameters; ignored by the other kernels.
    std::size_t d_k = 128;
    int subgrid_rows = 8;
    int subgrid_cols = 8;
    std::size_t block_tiles = 2;

    // Plain key=value file with repeated `size=` lines.
    static ExperimentSpec load(const std::string& path);
    void validate() const;
};

// op_kind=weight lines.
WeightTable load_weight_table(const std::string& path);

// Per-op weight table calibrated so the fused kernel's weighted
// decomposition reproduces the published runtime ordering
// (exponentiate > normalize > matmul). Calibrated to the figure, not
// measured; only the ordering is meaningful.
WeightTable default_fused_weight_table();

struct SizeSummary {
    std::size_t n = 0;
    std::uint64_t total_count = 0;
    double ratio_vs_prev = 0.0;  // 0 for the first size
    double oracle_max_dev = 0.0;
    double wall_ms = 0.0;  // informational only
};

struct ExperimentResult {
    std::vector<SizeSummary> summaries;
    std::string ledger_csv_path;
    std::string summary_csv_path;
};

// Runs the spec: per size and repeat, generates seeded inputs, runs the
// kernel, verifies against the float64 oracle (OracleMismatch aborts the
// run), and appends ledger rows. Writes <name>_ledger.csv and
// <name>_summary.csv under out_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                Scheduler sched = Scheduler::multi_thread);

// Ledger CSV dump: header + one row per (core, op kind) with nonzero count.
void write_ledger_csv(const std::string& path, const CoreGrid& grid,
                      const std::optional<WeightTable>& weights, std::size_t n);

}  // namespace gfat
