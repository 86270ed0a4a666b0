#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gfat/grid.hpp"

namespace gfat {

enum class Implementation { cpu_inplace, grid_softmax, grid_fused };

const char* to_string(Implementation impl);

// Closed-form maximum-sequence-length result plus the config values that
// produced it.
struct CapacityReport {
    Implementation implementation = Implementation::cpu_inplace;
    std::size_t n_max = 0;
    std::vector<std::pair<std::string, std::uint64_t>> assumptions;
};

// In-place CPU softmax bound: floor(sqrt(memory / 4)).
std::size_t n_max_cpu(std::uint64_t memory_bytes);

// Dedicated grid softmax bound: one full row of tiles per core.
std::size_t n_max_grid_softmax(const GridConfig& cfg);

// Fused kernel bound: side of the largest square slice a core can store,
// times the sub-grid row count.
std::size_t n_max_grid_fused(const GridConfig& cfg, std::size_t subgrid_rows);

CapacityReport capacity_report(Implementation impl, const GridConfig& cfg,
                               std::uint64_t cpu_memory_bytes = 8ull << 30,
                               std::size_t subgrid_rows = 9);

}  // namespace gfat
