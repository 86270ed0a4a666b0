#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gfat/bf16.hpp"
#include "gfat/matrix.hpp"

namespace gfat {

inline constexpr std::size_t kTileDim = 32;
inline constexpr std::size_t kTileScalars = kTileDim * kTileDim;
inline constexpr std::size_t kTileBytes = kTileScalars * 2;

// 32x32 block of bf16 scalars, row-major. The unit of all grid storage,
// transport and compute.
struct Tile {
    std::array<Bf16Scalar, kTileScalars> data{};

    Bf16Scalar& at(std::size_t i, std::size_t j) { return data[i * kTileDim + j]; }
    Bf16Scalar at(std::size_t i, std::size_t j) const { return data[i * kTileDim + j]; }

    bool operator==(const Tile&) const = default;
};

// A matrix stored as a grid of tiles plus its logical scalar dimensions.
// Both dimensions must be positive multiples of 32.
class TiledMatrix {
  public:
    TiledMatrix() = default;
    TiledMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t tile_rows() const { return rows_ / kTileDim; }
    std::size_t tile_cols() const { return cols_ / kTileDim; }

    Tile& tile(std::size_t ti, std::size_t tj) { return tiles_[ti * tile_cols() + tj]; }
    const Tile& tile(std::size_t ti, std::size_t tj) const {
        return tiles_[ti * tile_cols() + tj];
    }

    bool operator==(const TiledMatrix&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Tile> tiles_;
};

// Element (i,j) lands in tile (i/32, j/32) at intra-tile position
// (i%32, j%32); every element takes one bf16 rounding.
TiledMatrix tilize(const Matrix64& m);

// Exact inverse index mapping; bf16 -> f64 is exact.
Matrix64 untilize(const TiledMatrix& t);

bool all_finite(const TiledMatrix& t);

}  // namespace gfat
