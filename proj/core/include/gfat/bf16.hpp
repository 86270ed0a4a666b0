#pragma once

#include <bit>
#include <cstdint>

namespace gfat {

// 16-bit brain float: 1 sign, 8 exponent, 7 mantissa bits. Same exponent
// range as float32, so conversion back to float32 is exact (zero-extend the
// mantissa). Conversion from float32 rounds to nearest, ties to even.
class Bf16Scalar {
  public:
    constexpr Bf16Scalar() = default;

    static constexpr Bf16Scalar from_bits(std::uint16_t bits) {
        Bf16Scalar s;
        s.bits_ = bits;
        return s;
    }

    static Bf16Scalar from_f32(float x) {
        const std::uint32_t u = std::bit_cast<std::uint32_t>(x);
        if ((u & 0x7FFFFFFFu) > 0x7F800000u) {
            // NaN: keep sign, force a quiet NaN payload.
            return from_bits(static_cast<std::uint16_t>((u >> 16) | 0x0040u));
        }
        // Round to nearest even on the 16 truncated mantissa bits. Infinities
        // fall through unchanged (their low 16 bits are zero).
        const std::uint32_t rounding_bias = 0x7FFFu + ((u >> 16) & 1u);
        return from_bits(static_cast<std::uint16_t>((u + rounding_bias) >> 16));
    }

    constexpr float to_f32() const {
        return std::bit_cast<float>(static_cast<std::uint32_t>(bits_) << 16);
    }

    constexpr std::uint16_t bits() const { return bits_; }

    constexpr bool operator==(const Bf16Scalar& other) const = default;

  private:
    std::uint16_t bits_ = 0;
};

inline Bf16Scalar bf16_from_f32(float x) { return Bf16Scalar::from_f32(x); }
inline float bf16_to_f32(Bf16Scalar s) { return s.to_f32(); }

// One round trip through the 16-bit format.
inline float bf16_round(float x) { return Bf16Scalar::from_f32(x).to_f32(); }

}  // namespace gfat
