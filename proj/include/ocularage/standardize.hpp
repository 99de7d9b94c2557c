#pragma once

#include <cmath>
#include <vector>

#include "ocularage/errors.hpp"
#include "ocularage/image.hpp"
#include "ocularage/rubber_sheet.hpp"
#include "ocularage/tensor.hpp"

namespace ocularage {

struct PixelStats {
    double mean = 0.0;
    double std = 0.0;
};

// Reference values measured on full-scale capture datasets; exposed as
// named presets selectable from the config file.
inline constexpr PixelStats kEyeStatsPreset{0.5187, 0.2505};
inline constexpr PixelStats kIrisStatsPreset{0.2103, 0.0879};

/// Streaming accumulator for the global pixel mean and population standard
/// deviation across a dataset.
struct StatsAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    int64_t n = 0;

    void add(const float* data, size_t count) {
        for (size_t i = 0; i < count; ++i) {
            const double v = static_cast<double>(data[i]);
            sum += v;
            sum_sq += v * v;
        }
        n += static_cast<int64_t>(count);
    }

    void add(const GrayImage& img) { add(img.pixels.data(), img.pixels.size()); }
    void add_strip(const NormalizedIris& s) { add(s.strip.data(), s.strip.size()); }

    PixelStats finalize() const {
        if (n == 0) throw EmptyDataset("compute_dataset_stats: no pixels seen");
        PixelStats out;
        out.mean = sum / static_cast<double>(n);
        // clamp tiny negative rounding residue; NaN from bad data passes through
        const double var = sum_sq / static_cast<double>(n) - out.mean * out.mean;
        out.std = std::sqrt(var < 0.0 ? 0.0 : var);
        return out;
    }
};

template <typename It>
inline PixelStats compute_dataset_stats(It first, It last) {
    StatsAccumulator acc;
    for (; first != last; ++first) acc.add(*first);
    return acc.finalize();
}

inline Tensor standardize_eye(const GrayImage& img, const PixelStats& stats) {
    if (stats.std <= 0.0) throw ZeroStd("standardize: std must be positive");
    Tensor t({1, img.height, img.width});
    const float mean = static_cast<float>(stats.mean);
    const float inv = static_cast<float>(1.0 / stats.std);
    for (size_t i = 0; i < img.pixels.size(); ++i) t.data[i] = (img.pixels[i] - mean) * inv;
    return t;
}

/// Iris input: channel 0 is the standardized strip, channel 1 the raw
/// validity mask (kept in {0,1} so it stays a pure indicator).
inline Tensor standardize_iris(const NormalizedIris& s, const PixelStats& stats) {
    if (stats.std <= 0.0) throw ZeroStd("standardize: std must be positive");
    Tensor t({2, kRadialBins, kAngularBins});
    const float mean = static_cast<float>(stats.mean);
    const float inv = static_cast<float>(1.0 / stats.std);
    const size_t plane = s.strip.size();
    for (size_t i = 0; i < plane; ++i) t.data[i] = (s.strip[i] - mean) * inv;
    for (size_t i = 0; i < plane; ++i) t.data[plane + i] = static_cast<float>(s.mask[i]);
    return t;
}

inline GrayImage unstandardize(const Tensor& t, const PixelStats& stats) {
    if (t.ndim() != 3 || t.shape[0] < 1) throw ShapeMismatch("unstandardize: expects CHW");
    GrayImage img(t.shape[2], t.shape[1]);
    const float mean = static_cast<float>(stats.mean);
    const float sd = static_cast<float>(stats.std);
    for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = t.data[i] * sd + mean;
    return img;
}

} // namespace ocularage
