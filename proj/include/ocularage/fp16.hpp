#pragma once

#include <bit>
#include <cstdint>

#include "ocularage/tensor.hpp"

namespace ocularage {

/// IEEE-754 binary16 conversion with round-to-nearest, ties-to-even.
/// Written out by hand because the toolchain offers no _Float16 on this
/// target; only used to simulate FP16 deployment numerics.
inline uint16_t f32_to_f16_bits(float f) {
    const uint32_t x = std::bit_cast<uint32_t>(f);
    const uint32_t sign = (x >> 16) & 0x8000u;
    uint32_t mant = x & 0x007fffffu;
    const int32_t exp = static_cast<int32_t>((x >> 23) & 0xffu);

    if (exp == 0xff) // inf or nan
        return static_cast<uint16_t>(sign | 0x7c00u | (mant ? (0x200u | (mant >> 13)) : 0u));

    const int32_t e = exp - 127 + 15;
    if (e >= 0x1f) return static_cast<uint16_t>(sign | 0x7c00u); // overflow to inf
    if (e <= 0) {
        if (e < -10) return static_cast<uint16_t>(sign); // underflow to signed zero
        mant |= 0x00800000u;                             // restore implicit bit
        const uint32_t shift = static_cast<uint32_t>(14 - e);
        uint32_t half = mant >> shift;
        const uint32_t rem = mant & ((1u << shift) - 1u);
        const uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half & 1u))) ++half;
        return static_cast<uint16_t>(sign | half); // carry may promote to smallest normal
    }

    uint16_t out = static_cast<uint16_t>(sign | (static_cast<uint32_t>(e) << 10) | (mant >> 13));
    const uint32_t rem = mant & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (out & 1u))) ++out; // carry ripples into exponent
    return out;
}

inline float f16_bits_to_f32(uint16_t h) {
    const uint32_t sign = static_cast<uint32_t>(h & 0x8000u) << 16;
    const uint32_t exp = (h >> 10) & 0x1fu;
    uint32_t mant = h & 0x3ffu;
    uint32_t x;
    if (exp == 0) {
        if (mant == 0) {
            x = sign;
        } else {
            int e = -1;
            do {
                ++e;
                mant <<= 1;
            } while (!(mant & 0x400u));
            mant &= 0x3ffu;
            x = sign | (static_cast<uint32_t>(112 - e) << 23) | (mant << 13);
        }
    } else if (exp == 0x1f) {
        x = sign | 0x7f800000u | (mant << 13);
    } else {
        x = sign | ((exp + 112u) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(x);
}

inline float fp16_round_trip(float v) { return f16_bits_to_f32(f32_to_f16_bits(v)); }

template <typename T>
inline void quantize_fp16_inplace(TensorT<T>& t) {
    for (auto& v : t.data) v = static_cast<T>(fp16_round_trip(static_cast<float>(v)));
}

} // namespace ocularage
