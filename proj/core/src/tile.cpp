#include "gfat/tile.hpp"

#include <cmath>
#include <string>

#include "gfat/errors.hpp"

namespace gfat {

TiledMatrix::TiledMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0 || rows % kTileDim != 0 || cols % kTileDim != 0) {
        throw DimensionError("tiled matrix dimensions must be positive multiples of 32, got " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }
    tiles_.resize(tile_rows() * tile_cols());
}

TiledMatrix tilize(const Matrix64& m) {
    TiledMatrix t(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            t.tile(i / kTileDim, j / kTileDim).at(i % kTileDim, j % kTileDim) =
                Bf16Scalar::from_f32(static_cast<float>(m.at(i, j)));
        }
    }
    return t;
}

Matrix64 untilize(const TiledMatrix& t) {
    Matrix64 m(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            m.at(i, j) = t.tile(i / kTileDim, j / kTileDim).at(i % kTileDim, j % kTileDim).to_f32();
        }
    }
    return m;
}

bool all_finite(const TiledMatrix& t) {
    for (std::size_t ti = 0; ti < t.tile_rows(); ++ti) {
        for (std::size_t tj = 0; tj < t.tile_cols(); ++tj) {
            for (const Bf16Scalar& s : t.tile(ti, tj).data) {
                if (!std::isfinite(s.to_f32())) return false;
            }
        }
    }
    return true;
}

}  // namespace gfat
