#include "gfat/tile_ops.hpp"

#include <algorithm>
#include <cmath>

namespace gfat {

void tile_row_max(std::span<const Tile> tiles, float* row_max) {
    for (const Tile& t : tiles) {
        for (std::size_t i = 0; i < kTileDim; ++i) {
            for (std::size_t j = 0; j < kTileDim; ++j) {
                row_max[i] = std::max(row_max[i], t.at(i, j).to_f32());
            }
        }
    }
}

void tile_row_sum(std::span<const Tile> tiles, float* row_sum) {
    for (const Tile& t : tiles) {
        for (std::size_t i = 0; i < kTileDim; ++i) {
            float acc = 0.0f;
            for (std::size_t j = 0; j < kTileDim; ++j) acc += t.at(i, j).to_f32();
            row_sum[i] += acc;
        }
    }
}

void tile_row_subtract(std::span<Tile> tiles, const float* row_values) {
    for (Tile& t : tiles) {
        for (std::size_t i = 0; i < kTileDim; ++i) {
            for (std::size_t j = 0; j < kTileDim; ++j) {
                t.at(i, j) = Bf16Scalar::from_f32(t.at(i, j).to_f32() - row_values[i]);
            }
        }
    }
}

void tile_row_exp(std::span<Tile> tiles) {
    for (Tile& t : tiles) {
        for (Bf16Scalar& s : t.data) {
            s = Bf16Scalar::from_f32(std::exp(s.to_f32()));
        }
    }
}

void tile_row_normalize(std::span<Tile> tiles, const float* row_sums) {
    for (Tile& t : tiles) {
        for (std::size_t i = 0; i < kTileDim; ++i) {
            for (std::size_t j = 0; j < kTileDim; ++j) {
                t.at(i, j) = Bf16Scalar::from_f32(t.at(i, j).to_f32() / row_sums[i]);
            }
        }
    }
}

void tile_matmul_acc(const Tile& a, const Tile& b, float* acc) {
    float bf[kTileScalars];
    for (std::size_t i = 0; i < kTileScalars; ++i) bf[i] = b.data[i].to_f32();
    for (std::size_t i = 0; i < kTileDim; ++i) {
        float* out = acc + i * kTileDim;
        for (std::size_t k = 0; k < kTileDim; ++k) {
            const float av = a.at(i, k).to_f32();
            const float* brow = bf + k * kTileDim;
            for (std::size_t j = 0; j < kTileDim; ++j) out[j] += av * brow[j];
        }
    }
}

void tile_scale(Tile& t, float factor) {
    for (Bf16Scalar& s : t.data) {
        s = Bf16Scalar::from_f32(s.to_f32() * factor);
    }
}

Tile tile_from_f32(const float* acc) {
    Tile t;
    for (std::size_t i = 0; i < kTileScalars; ++i) {
        t.data[i] = Bf16Scalar::from_f32(acc[i]);
    }
    return t;
}

}  // namespace gfat
