#pragma once

#include <cmath>
#include <cstdint>

#include "ocularage/errors.hpp"
#include "ocularage/image.hpp"
#include "ocularage/rng.hpp"
#include "ocularage/rubber_sheet.hpp"

namespace ocularage {

struct AugmentPolicy {
    double flip_prob = 0.5;
    double max_rotation = 10.0; // degrees
    double max_translate = 0.05; // fraction of image size
    double scale_min = 0.9;
    double scale_max = 1.1;
    double blur_prob = 0.2;
    double blur_sigma = 1.0;
    double sharpness_prob = 0.2;
    double autocontrast_prob = 0.2;

    void validate() const {
        for (double p : {flip_prob, blur_prob, sharpness_prob, autocontrast_prob})
            if (p < 0.0 || p > 1.0) throw ConfigError("augment: probabilities must lie in [0,1]");
        if (scale_min > scale_max) throw ConfigError("augment: scale_min must be <= scale_max");
        if (scale_min <= 0.0) throw ConfigError("augment: scale_min must be positive");
        if (max_rotation < 0.0 || max_translate < 0.0 || blur_sigma < 0.0)
            throw ConfigError("augment: magnitudes must be non-negative");
    }

    static AugmentPolicy none() {
        AugmentPolicy p;
        p.flip_prob = 0.0;
        p.max_rotation = 0.0;
        p.max_translate = 0.0;
        p.scale_min = p.scale_max = 1.0;
        p.blur_prob = 0.0;
        p.sharpness_prob = 0.0;
        p.autocontrast_prob = 0.0;
        return p;
    }

    bool affine_enabled() const {
        return max_rotation > 0.0 || max_translate > 0.0 || scale_min != 1.0 || scale_max != 1.0;
    }
};

namespace detail {

inline GrayImage affine_resample(const GrayImage& img, double rot_deg, double tx, double ty,
                                 double scale) {
    const double th = rot_deg * 3.14159265358979323846 / 180.0;
    const double cosv = std::cos(th) / scale;
    const double sinv = std::sin(th) / scale;
    const double cx = (img.width - 1) * 0.5;
    const double cy = (img.height - 1) * 0.5;
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx - tx;
            const double dy = y - cy - ty;
            const double sx = cosv * dx + sinv * dy + cx;
            const double sy = -sinv * dx + cosv * dy + cy;
            out.pixels[static_cast<size_t>(y) * img.width + x] =
                img.sample_bilinear(static_cast<float>(sx), static_cast<float>(sy));
        }
    }
    return out;
}

} // namespace detail

/// Fixed-order stochastic augmentation: flip, affine, blur, sharpness,
/// autocontrast. Each stage draws its gate (and parameters when enabled)
/// from one seeded stream, so outputs are reproducible per (image, seed).
inline GrayImage augment(const GrayImage& image, const AugmentPolicy& policy, uint64_t seed) {
    policy.validate();
    Rng rng(mix_seed(seed, 0xa6u));
    GrayImage out = image;

    if (rng.bernoulli(policy.flip_prob)) out = flip_horizontal(out);

    if (policy.affine_enabled()) {
        const double rot = rng.uniform(-policy.max_rotation, policy.max_rotation);
        const double tx = rng.uniform(-policy.max_translate, policy.max_translate) * image.width;
        const double ty = rng.uniform(-policy.max_translate, policy.max_translate) * image.height;
        const double sc = rng.uniform(policy.scale_min, policy.scale_max);
        out = detail::affine_resample(out, rot, tx, ty, sc);
    }

    if (rng.bernoulli(policy.blur_prob) && policy.blur_sigma > 0.0)
        out = gaussian_blur(out, policy.blur_sigma);

    if (rng.bernoulli(policy.sharpness_prob)) {
        const double amount = rng.uniform(0.3, 1.0);
        out = sharpen(out, static_cast<float>(amount));
    }

    if (rng.bernoulli(policy.autocontrast_prob)) out = autocontrast(out);

    return out;
}

/// Iris strips only receive blur; geometry is already canonical after
/// unrolling and the mask must stay aligned, so spatial transforms and
/// contrast changes are withheld.
inline NormalizedIris augment_iris(const NormalizedIris& n, const AugmentPolicy& policy,
                                   uint64_t seed) {
    policy.validate();
    Rng rng(mix_seed(seed, 0xb7u));
    if (!(rng.bernoulli(policy.blur_prob) && policy.blur_sigma > 0.0)) return n;
    GrayImage strip(kAngularBins, kRadialBins);
    strip.pixels = n.strip;
    strip = gaussian_blur(strip, policy.blur_sigma);
    NormalizedIris out = n;
    out.strip = strip.pixels;
    return out;
}

} // namespace ocularage
