#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ocularage/image.hpp"
#include "ocularage/png_io.hpp"
#include "ocularage/segmentation.hpp"

namespace ocularage {

constexpr int kAngularBins = 256;
constexpr int kRadialBins = 32;

/// Unrolled iris strip plus validity mask. Layout matches the cached PNGs:
/// rows are radial bins, columns angular bins, so element (i angular,
/// j radial) lives at j*256 + i.
struct NormalizedIris {
    std::vector<float> strip;
    std::vector<uint8_t> mask;

    NormalizedIris()
        : strip(static_cast<size_t>(kAngularBins) * kRadialBins, 0.0f),
          mask(static_cast<size_t>(kAngularBins) * kRadialBins, 0) {}

    float& strip_at(int i, int j) { return strip[static_cast<size_t>(j) * kAngularBins + i]; }
    float strip_at(int i, int j) const { return strip[static_cast<size_t>(j) * kAngularBins + i]; }
    uint8_t& mask_at(int i, int j) { return mask[static_cast<size_t>(j) * kAngularBins + i]; }
    uint8_t mask_at(int i, int j) const { return mask[static_cast<size_t>(j) * kAngularBins + i]; }
};

/// Daugman rubber-sheet model: theta = 2*pi*i/256 (theta=0 along +x),
/// rho = (j+0.5)/32; the sample point interpolates linearly between the
/// pupil boundary point and the iris boundary point at that angle. Mask is 0
/// above the upper lid chord, below the lower one, or out of bounds.
inline NormalizedIris rubber_sheet(const GrayImage& image, const IrisAnnulus& a) {
    NormalizedIris out;
    constexpr double kTau = 2.0 * 3.14159265358979323846;
    for (int i = 0; i < kAngularBins; ++i) {
        const double theta = kTau * i / kAngularBins;
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const double px = a.pupil_cx + a.pupil_r * c;
        const double py = a.pupil_cy + a.pupil_r * s;
        const double ix = a.iris_cx + a.iris_r * c;
        const double iy = a.iris_cy + a.iris_r * s;
        for (int j = 0; j < kRadialBins; ++j) {
            const double rho = (j + 0.5) / kRadialBins;
            const double x = px + rho * (ix - px);
            const double y = py + rho * (iy - py);
            out.strip_at(i, j) = image.sample_bilinear(static_cast<float>(x), static_cast<float>(y));
            const bool oob = x < 0.0 || y < 0.0 || x > image.width - 1.0 || y > image.height - 1.0;
            const bool occluded = y < a.upper_lid_y || y > a.lower_lid_y;
            out.mask_at(i, j) = (oob || occluded) ? 0 : 1;
        }
    }
    return out;
}

inline std::string strip_path(const std::string& dir, const std::string& id) {
    return dir + "/" + id + "_strip.png";
}
inline std::string mask_path(const std::string& dir, const std::string& id) {
    return dir + "/" + id + "_mask.png";
}

inline void write_normalized(const std::string& dir, const std::string& id,
                             const NormalizedIris& n) {
    GrayImage strip(kAngularBins, kRadialBins);
    strip.pixels = n.strip;
    write_gray_png(strip_path(dir, id), quantize_u8(strip));

    GrayImageU8 mask;
    mask.width = kAngularBins;
    mask.height = kRadialBins;
    mask.pixels.resize(n.mask.size());
    for (size_t k = 0; k < n.mask.size(); ++k) mask.pixels[k] = n.mask[k] ? 255 : 0;
    write_gray_png(mask_path(dir, id), mask);
}

inline NormalizedIris read_normalized(const std::string& strip_file, const std::string& mask_file) {
    const GrayImageU8 strip = read_gray_png_u8(strip_file);
    const GrayImageU8 mask = read_gray_png_u8(mask_file);
    if (strip.width != kAngularBins || strip.height != kRadialBins ||
        mask.width != kAngularBins || mask.height != kRadialBins)
        throw DataError("normalized iris cache has wrong shape: " + strip_file);
    NormalizedIris out;
    for (size_t k = 0; k < out.strip.size(); ++k) {
        out.strip[k] = static_cast<float>(strip.pixels[k]) / 255.0f;
        out.mask[k] = mask.pixels[k] >= 128 ? 1 : 0;
    }
    return out;
}

inline NormalizedIris read_normalized_cached(const std::string& dir, const std::string& id) {
    return read_normalized(strip_path(dir, id), mask_path(dir, id));
}

} // namespace ocularage
