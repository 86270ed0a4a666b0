#pragma once

#include <cstddef>
#include <span>

#include "gfat/tile.hpp"

namespace gfat {

// Tile-granularity compute primitives. All arithmetic runs in f32; results
// are rounded to bf16 only when stored back into a tile. Reductions fold
// tiles left to right for determinism.

// Per-scalar-row running max over a span of tiles sharing the same 32 rows.
// stats must hold 32 floats; caller initializes (e.g. to -inf).
void tile_row_max(std::span<const Tile> tiles, float* row_max);

// Per-scalar-row running sum; stats must hold 32 floats, caller zeroes.
void tile_row_sum(std::span<const Tile> tiles, float* row_sum);

void tile_row_subtract(std::span<Tile> tiles, const float* row_values);
void tile_row_exp(std::span<Tile> tiles);
void tile_row_normalize(std::span<Tile> tiles, const float* row_sums);

// acc += a * b for 32x32 tiles, f32 accumulation. acc has 1024 floats in
// row-major tile layout.
void tile_matmul_acc(const Tile& a, const Tile& b, float* acc);

void tile_scale(Tile& t, float factor);

Tile tile_from_f32(const float* acc);

}  // namespace gfat
