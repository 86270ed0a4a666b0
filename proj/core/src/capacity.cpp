#include "gfat/capacity.hpp"

#include <cmath>

#include "gfat/errors.hpp"
#include "gfat/tile.hpp"

namespace gfat {

const char* to_string(Implementation impl) {
    switch (impl) {
        case Implementation::cpu_inplace: return "cpu_inplace";
        case Implementation::grid_softmax: return "grid_softmax";
        case Implementation::grid_fused: return "grid_fused";
    }
    return "?";
}

namespace {

std::size_t isqrt_floor(std::uint64_t v) {
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(v)));
    while ((r + 1) * static_cast<std::uint64_t>(r + 1) <= v) ++r;
    while (static_cast<std::uint64_t>(r) * r > v) --r;
    return r;
}

}  // namespace

std::size_t n_max_cpu(std::uint64_t memory_bytes) {
    if (memory_bytes == 0) throw SpecError("memory_bytes must be positive");
    return isqrt_floor(memory_bytes / 4);
}

std::size_t n_max_grid_softmax(const GridConfig& cfg) {
    return cfg.sram_usable_tiles * kTileDim;
}

std::size_t n_max_grid_fused(const GridConfig& cfg, std::size_t subgrid_rows) {
    if (subgrid_rows == 0) throw SpecError("subgrid_rows must be positive");
    return isqrt_floor(cfg.fused_sram_scalars) * subgrid_rows;
}

CapacityReport capacity_report(Implementation impl, const GridConfig& cfg,
                               std::uint64_t cpu_memory_bytes, std::size_t subgrid_rows) {
    CapacityReport report;
    report.implementation = impl;
    switch (impl) {
        case Implementation::cpu_inplace:
            report.n_max = n_max_cpu(cpu_memory_bytes);
            report.assumptions = {{"memory_bytes", cpu_memory_bytes}, {"bytes_per_float", 4}};
            break;
        case Implementation::grid_softmax:
            report.n_max = n_max_grid_softmax(cfg);
            report.assumptions = {{"sram_usable_tiles", cfg.sram_usable_tiles},
                                  {"tile_width", kTileDim}};
            break;
        case Implementation::grid_fused:
            report.n_max = n_max_grid_fused(cfg, subgrid_rows);
            report.assumptions = {{"fused_sram_scalars", cfg.fused_sram_scalars},
                                  {"subgrid_rows", subgrid_rows}};
            break;
    }
    return report;
}

}  // namespace gfat
