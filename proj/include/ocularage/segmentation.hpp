#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ocularage/errors.hpp"
#include "ocularage/image.hpp"

namespace ocularage {

struct IrisAnnulus {
    double pupil_cx = 0.0, pupil_cy = 0.0;
    double pupil_r = 0.0;
    double iris_cx = 0.0, iris_cy = 0.0;
    double iris_r = 0.0;
    double upper_lid_y = 0.0;
    double lower_lid_y = 0.0;
};

struct SegmentationConfig {
    double pupil_r_min_frac = 0.025; // of min(width, height)
    double pupil_r_max_frac = 0.125;
    double iris_r_max_frac = 0.35;
    double pupil_min_response = 0.02;
    double iris_min_response = 0.02;
    double pupil_interior_max_mean = 0.30;

    void validate() const {
        if (pupil_r_min_frac <= 0 || pupil_r_max_frac <= pupil_r_min_frac ||
            iris_r_max_frac <= pupil_r_max_frac)
            throw ConfigError("segmentation: radius fractions must be ordered and positive");
        if (pupil_min_response <= 0 || iris_min_response <= 0)
            throw ConfigError("segmentation: response thresholds must be positive");
    }
};

namespace detail {

constexpr double kSegPi = 3.14159265358979323846;

// Mean intensity sampled on a circle (or set of arcs) of radius r.
inline double circle_mean(const GrayImage& img, double cx, double cy, double r,
                          const std::vector<double>& angles) {
    double sum = 0.0;
    for (double a : angles)
        sum += img.sample_bilinear(static_cast<float>(cx + r * std::cos(a)),
                                   static_cast<float>(cy + r * std::sin(a)));
    return sum / static_cast<double>(angles.size());
}

inline std::vector<double> full_circle_angles(int n) {
    std::vector<double> a(n);
    for (int i = 0; i < n; ++i) a[i] = 2.0 * kSegPi * i / n;
    return a;
}

// Lateral arcs avoid the eyelids: +-32 degrees around each horizontal axis,
// which stays inside the palpebral fissure even when the iris nearly fills it.
inline std::vector<double> lateral_arc_angles(int n) {
    constexpr double kHalfSpan = 0.56; // radians
    std::vector<double> a;
    a.reserve(n);
    const int half = n / 2;
    for (int i = 0; i < half; ++i)
        a.push_back(-kHalfSpan + 2.0 * kHalfSpan * (i + 0.5) / half);
    for (int i = 0; i < n - half; ++i)
        a.push_back(kSegPi - kHalfSpan + 2.0 * kHalfSpan * (i + 0.5) / (n - half));
    return a;
}

// Daugman response profile: radial derivative of the boundary mean, smoothed
// with a small Gaussian along r. Returns one value per radius index.
inline std::vector<double> daugman_profile(const GrayImage& img, double cx, double cy,
                                           const std::vector<double>& radii,
                                           const std::vector<double>& angles) {
    const size_t n = radii.size();
    std::vector<double> mean(n);
    for (size_t i = 0; i < n; ++i) mean[i] = circle_mean(img, cx, cy, radii[i], angles);

    std::vector<double> deriv(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i)
        deriv[i] = (mean[i + 1] - mean[i - 1]) / (radii[i + 1] - radii[i - 1]);

    // sigma = 1 radius step, radius 2 kernel
    static const std::array<double, 5> k = [] {
        std::array<double, 5> w{};
        double s = 0.0;
        for (int i = -2; i <= 2; ++i) s += (w[i + 2] = std::exp(-0.5 * i * i));
        for (auto& v : w) v /= s;
        return w;
    }();
    std::vector<double> smooth(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = -2; j <= 2; ++j) {
            const size_t idx = std::clamp<long>(static_cast<long>(i) + j, 0L, static_cast<long>(n) - 1);
            acc += k[j + 2] * deriv[idx];
        }
        smooth[i] = acc;
    }
    return smooth;
}

struct CircleFit {
    double cx = 0.0, cy = 0.0, r = 0.0;
    double response = 0.0;
};

// Exhaustive search over a center grid and radius list; keeps the circle with
// the strongest positive (dark-to-bright) Daugman response.
inline CircleFit best_circle(const GrayImage& img, double cx0, double cy0, double cbox, double cstep,
                             double r_min, double r_max, double r_step,
                             const std::vector<double>& angles) {
    std::vector<double> radii;
    for (double r = r_min; r <= r_max + 1e-9; r += r_step) radii.push_back(r);
    if (radii.size() < 5) throw DataError("segmentation: degenerate radius range");

    CircleFit best;
    best.response = -1e9;
    for (double cy = cy0 - cbox; cy <= cy0 + cbox + 1e-9; cy += cstep) {
        for (double cx = cx0 - cbox; cx <= cx0 + cbox + 1e-9; cx += cstep) {
            const auto prof = daugman_profile(img, cx, cy, radii, angles);
            for (size_t i = 2; i + 2 < prof.size(); ++i) {
                if (prof[i] > best.response) {
                    best = {cx, cy, radii[i], prof[i]};
                }
            }
        }
    }
    return best;
}

// Darkest-disc prior on a heavily blurred image. A large pupil is a flat
// plateau where the single darkest pixel jitters with noise, so the center
// estimate is the centroid of everything within a small band of the minimum.
inline std::pair<double, double> darkest_disc(const GrayImage& img, int margin) {
    const GrayImage blurred = gaussian_blur(img, 4.0);
    float darkest = 1e9f;
    for (int y = margin; y < img.height - margin; y += 2)
        for (int x = margin; x < img.width - margin; x += 2)
            darkest = std::min(darkest, blurred.at(x, y));
    double sx = 0.0, sy = 0.0, n = 0.0;
    for (int y = margin; y < img.height - margin; y += 2)
        for (int x = margin; x < img.width - margin; x += 2)
            if (blurred.at(x, y) <= darkest + 0.02f) {
                sx += x;
                sy += y;
                n += 1.0;
            }
    return {sx / n, sy / n};
}

} // namespace detail

/// Coarse-to-fine integro-differential boundary localization. The limbus is
/// found first on lateral arcs around the darkest disc (it is by far the
/// strongest boundary), then the pupil is searched strictly inside it with a
/// dark-interior requirement so texture rings and the limbus itself cannot
/// masquerade as a pupil. Eyelid chords are the rows of strongest mean
/// vertical gradient across the central iris columns.
inline IrisAnnulus locate_boundaries(const GrayImage& image, const SegmentationConfig& cfg = {}) {
    cfg.validate();
    const int md = std::min(image.width, image.height);
    if (md < 48) throw DataError("locate_boundaries: image too small");

    const GrayImage smooth = gaussian_blur(image, 1.2);

    const double pr_min = std::max(3.0, cfg.pupil_r_min_frac * md);
    const double pr_max = cfg.pupil_r_max_frac * md;
    const double ir_max = cfg.iris_r_max_frac * md;

    const auto full = detail::full_circle_angles(64);
    const auto full_fine = detail::full_circle_angles(128);
    const auto arcs = detail::lateral_arc_angles(64);
    const auto arcs_fine = detail::lateral_arc_angles(128);

    // --- iris ---
    const int margin = static_cast<int>(pr_max) + 4;
    auto [cx0, cy0] = detail::darkest_disc(image, std::min(margin, md / 3));
    const double ir_min = 2.0 * pr_min; // pupil/iris ratio never reaches 1/2
    if (ir_min + 8.0 >= ir_max) throw SegmentationFailure("no room for iris radius search");
    auto iris = detail::best_circle(smooth, cx0, cy0, 8.0, 2.0, ir_min, ir_max, 2.0, arcs);
    iris = detail::best_circle(smooth, iris.cx, iris.cy, 2.0, 1.0,
                               std::max(ir_min, iris.r - 3.0), std::min(ir_max, iris.r + 3.0), 0.5,
                               arcs_fine);
    if (iris.response < cfg.iris_min_response)
        throw SegmentationFailure("iris response below threshold");

    // --- pupil ---
    // Candidate circles stay well inside the limbus, near the iris center,
    // and must sit on dark ground: the center and four half-radius probes
    // all read darker than the interior ceiling on the blurred image.
    const double pr_hi = std::min(pr_max, 0.62 * iris.r);
    if (pr_hi <= pr_min + 4.0) throw SegmentationFailure("no room for pupil radius search");
    auto probe_dark = [&](double cx, double cy, double r) {
        const double d = 0.5 * r;
        const std::array<std::pair<double, double>, 5> probes = {
            {{0.0, 0.0}, {d, 0.0}, {-d, 0.0}, {0.0, d}, {0.0, -d}}};
        double worst = 0.0;
        for (const auto& [ox, oy] : probes)
            worst = std::max(worst, static_cast<double>(smooth.sample_bilinear(cx + ox, cy + oy)));
        return worst <= cfg.pupil_interior_max_mean;
    };
    auto pupil_search = [&](double pcx, double pcy, double box, double cstep, double r_lo,
                            double r_hi, double r_step, const std::vector<double>& angles) {
        std::vector<double> radii;
        for (double r = r_lo; r <= r_hi + 1e-9; r += r_step) radii.push_back(r);
        if (radii.size() < 5) throw DataError("segmentation: degenerate radius range");
        detail::CircleFit best;
        best.response = -1e9;
        for (double cy = pcy - box; cy <= pcy + box + 1e-9; cy += cstep) {
            for (double cx = pcx - box; cx <= pcx + box + 1e-9; cx += cstep) {
                const auto prof = detail::daugman_profile(smooth, cx, cy, radii, angles);
                for (size_t i = 2; i + 2 < prof.size(); ++i)
                    if (prof[i] > best.response && probe_dark(cx, cy, radii[i]))
                        best = {cx, cy, radii[i], prof[i]};
            }
        }
        return best;
    };
    auto pupil = pupil_search(iris.cx, iris.cy, 8.0, 2.0, pr_min, pr_hi, 1.0, full);
    if (pupil.response < cfg.pupil_min_response)
        throw SegmentationFailure("pupil response below threshold");
    pupil = pupil_search(pupil.cx, pupil.cy, 2.0, 1.0, std::max(pr_min, pupil.r - 2.0),
                         std::min(pr_hi, pupil.r + 2.0), 0.5, full_fine);
    if (pupil.response < cfg.pupil_min_response)
        throw SegmentationFailure("pupil response below threshold");

    // reject bright interiors on the raw image as a final guard
    {
        double acc = 0.0;
        int cnt = 0;
        const int rr = std::max(1, static_cast<int>(pupil.r * 0.6));
        for (int dy = -rr; dy <= rr; ++dy)
            for (int dx = -rr; dx <= rr; ++dx) {
                if (dx * dx + dy * dy > rr * rr) continue;
                const int x = static_cast<int>(pupil.cx) + dx;
                const int y = static_cast<int>(pupil.cy) + dy;
                if (!image.in_bounds(x, y)) continue;
                acc += image.at(x, y);
                ++cnt;
            }
        if (cnt == 0 || acc / cnt > cfg.pupil_interior_max_mean)
            throw SegmentationFailure("pupil interior too bright");
    }

    // keep circles inside the frame
    auto inside = [&](double cx, double cy, double r) {
        return cx - r >= 0 && cy - r >= 0 && cx + r <= image.width - 1 && cy + r <= image.height - 1;
    };
    if (!inside(pupil.cx, pupil.cy, pupil.r) || !inside(iris.cx, iris.cy, iris.r))
        throw SegmentationFailure("boundary circle leaves the frame");

    // --- eyelid chords ---
    const GrayImage lid_img = gaussian_blur(image, 1.0);
    const int x_lo = std::max(0, static_cast<int>(iris.cx - 0.5 * iris.r));
    const int x_hi = std::min(image.width - 1, static_cast<int>(iris.cx + 0.5 * iris.r));
    auto band_gradient = [&](int y) {
        double acc = 0.0;
        int cnt = 0;
        for (int x = x_lo; x <= x_hi; ++x) {
            const int ym = std::max(0, y - 2);
            const int yp = std::min(image.height - 1, y + 2);
            acc += (lid_img.at(x, yp) - lid_img.at(x, ym)) / static_cast<double>(yp - ym);
            ++cnt;
        }
        return cnt ? acc / cnt : 0.0;
    };
    auto strongest_row = [&](int y_from, int y_to) {
        int best_y = (y_from + y_to) / 2;
        double best_g = -1.0;
        for (int y = y_from; y <= y_to; ++y) {
            const double g = std::abs(band_gradient(y));
            if (g > best_g) {
                best_g = g;
                best_y = y;
            }
        }
        return best_y;
    };
    const int cy_i = static_cast<int>(std::lround(iris.cy));
    const int up_from = std::clamp(cy_i - static_cast<int>(1.4 * iris.r), 1, image.height - 2);
    const int up_to = std::clamp(cy_i - static_cast<int>(0.35 * iris.r), 1, image.height - 2);
    const int lo_from = std::clamp(cy_i + static_cast<int>(0.25 * iris.r), 1, image.height - 2);
    const int lo_to = std::clamp(cy_i + static_cast<int>(1.3 * iris.r), 1, image.height - 2);

    IrisAnnulus out;
    out.pupil_cx = pupil.cx;
    out.pupil_cy = pupil.cy;
    out.pupil_r = pupil.r;
    out.iris_cx = iris.cx;
    out.iris_cy = iris.cy;
    out.iris_r = iris.r;
    out.upper_lid_y = strongest_row(up_from, up_to);
    out.lower_lid_y = strongest_row(lo_from, lo_to);
    if (out.upper_lid_y >= out.lower_lid_y)
        throw SegmentationFailure("eyelid chords crossed");
    return out;
}

} // namespace ocularage
