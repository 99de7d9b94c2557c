#pragma once

#include "ocularage/tensor.hpp"

namespace ocularage {

/// Converts a pretrained RGB stem kernel [out,3,k,k] to a grayscale (or
/// gray+mask) stem: the first target channel averages the three RGB planes;
/// a second (mask) channel, when requested, starts at zero so the mask
/// cannot perturb initial activations.
template <typename T>
inline TensorT<T> adapt_stem(const TensorT<T>& rgb_weights, int target_channels) {
    if (rgb_weights.ndim() != 4 || rgb_weights.dim(1) != 3)
        throw ShapeMismatch("adapt_stem: expected [out,3,k,k] weights");
    if (target_channels != 1 && target_channels != 2)
        throw ShapeMismatch("adapt_stem: target_channels must be 1 or 2");
    const int out_c = rgb_weights.dim(0);
    const int kh = rgb_weights.dim(2);
    const int kw = rgb_weights.dim(3);
    TensorT<T> out({out_c, target_channels, kh, kw});
    const size_t plane = static_cast<size_t>(kh) * kw;
    for (int oc = 0; oc < out_c; ++oc) {
        const T* src = &rgb_weights.data[static_cast<size_t>(oc) * 3 * plane];
        T* dst = &out.data[static_cast<size_t>(oc) * target_channels * plane];
        for (size_t i = 0; i < plane; ++i)
            dst[i] = (src[i] + src[plane + i] + src[2 * plane + i]) / T(3);
        // channel 1 (mask), when present, stays zero-initialized
    }
    return out;
}

} // namespace ocularage
