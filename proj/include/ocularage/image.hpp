#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ocularage/errors.hpp"

namespace ocularage {

/// Row-major grayscale raster with intensities in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    /// Bilinear sample with edge-clamped neighbors.
    float sample_bilinear(double x, double y) const {
        x = std::clamp(x, 0.0, static_cast<double>(width - 1));
        y = std::clamp(y, 0.0, static_cast<double>(height - 1));
        const int x0 = static_cast<int>(x);
        const int y0 = static_cast<int>(y);
        const int x1 = std::min(x0 + 1, width - 1);
        const int y1 = std::min(y0 + 1, height - 1);
        const double fx = x - x0;
        const double fy = y - y0;
        const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
        const double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
        return static_cast<float>(top * (1.0 - fy) + bot * fy);
    }

    void clamp01() {
        for (auto& p : pixels) p = std::clamp(p, 0.0f, 1.0f);
    }
};

/// Bilinear resize with pixel-center alignment. Resizing to the source size
/// reproduces the input exactly.
inline GrayImage resize(const GrayImage& src, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw DataError("resize: output dimensions must be >= 1");
    if (out_w == src.width && out_h == src.height) return src;
    GrayImage dst(out_w, out_h);
    const double sx = static_cast<double>(src.width) / out_w;
    const double sy = static_cast<double>(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            dst.at(x, y) = src.sample_bilinear(src_x, src_y);
        }
    }
    return dst;
}

inline GrayImage flip_horizontal(const GrayImage& src) {
    GrayImage dst(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            dst.at(x, y) = src.at(src.width - 1 - x, y);
    return dst;
}

/// 3x3 box blur with edge-clamped taps; a constant image stays constant.
inline GrayImage box_blur3(const GrayImage& src) {
    GrayImage dst(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = std::clamp(y + dy, 0, src.height - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = std::clamp(x + dx, 0, src.width - 1);
                    acc += src.at(xx, yy);
                }
            }
            dst.at(x, y) = static_cast<float>(acc / 9.0);
        }
    }
    return dst;
}

/// Separable Gaussian blur, kernel radius ceil(3*sigma), edge clamp.
inline GrayImage gaussian_blur(const GrayImage& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        norm += kernel[i + radius];
    }
    for (auto& k : kernel) k /= norm;

    GrayImage tmp(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, src.width - 1);
                acc += kernel[i + radius] * src.at(xx, y);
            }
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    GrayImage dst(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, src.height - 1);
                acc += kernel[i + radius] * tmp.at(x, yy);
            }
            dst.at(x, y) = static_cast<float>(acc);
        }
    }
    return dst;
}

inline std::pair<float, float> min_max(const GrayImage& img) {
    float lo = img.pixels.empty() ? 0.0f : img.pixels[0];
    float hi = lo;
    for (float p : img.pixels) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    return {lo, hi};
}

/// Linear rescale so the darkest pixel maps to 0 and the brightest to 1.
inline GrayImage autocontrast(const GrayImage& src) {
    auto [lo, hi] = min_max(src);
    if (hi - lo < 1e-12f) return src;
    GrayImage dst(src.width, src.height);
    const float scale = 1.0f / (hi - lo);
    for (size_t i = 0; i < src.pixels.size(); ++i)
        dst.pixels[i] = (src.pixels[i] - lo) * scale;
    return dst;
}

/// Unsharp mask: img + amount * (img - box3(img)), clamped to [0,1].
inline GrayImage sharpen(const GrayImage& src, float amount = 1.0f) {
    GrayImage smooth = box_blur3(src);
    GrayImage dst(src.width, src.height);
    for (size_t i = 0; i < src.pixels.size(); ++i) {
        dst.pixels[i] = std::clamp(src.pixels[i] + amount * (src.pixels[i] - smooth.pixels[i]), 0.0f, 1.0f);
    }
    return dst;
}

inline double mean_intensity(const GrayImage& img) {
    double acc = 0.0;
    for (float p : img.pixels) acc += p;
    return img.pixels.empty() ? 0.0 : acc / static_cast<double>(img.pixels.size());
}

} // namespace ocularage
