#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "ocularage/errors.hpp"
#include "ocularage/image.hpp"
#include "ocularage/manifest.hpp"
#include "ocularage/rng.hpp"

namespace ocularage {

struct SynthParams {
    int subject_count = 40;
    int sessions_per_subject = 4;
    int width = 640;
    int height = 480;
    double cue_strength = 1.0;
    uint64_t seed = 42;

    void validate() const {
        if (subject_count < 1) throw ConfigError("synth: subject_count must be >= 1");
        if (sessions_per_subject < 1) throw ConfigError("synth: sessions_per_subject must be >= 1");
        if (sessions_per_subject > kMaxAge - kMinAge + 1)
            throw ConfigError("synth: sessions_per_subject must be <= 13 to keep ages in study range");
        if (cue_strength < 0.0 || cue_strength > 1.0)
            throw ConfigError("synth: cue_strength must lie in [0,1]");
        if (width < 64 || height < 64) throw ConfigError("synth: image size too small");
    }
};

/// Ground-truth geometry of one rendered eye, in pixel units of the rendered
/// frame. Kept around so segmentation tests can score recovery error.
struct EyeAnnotation {
    double cx = 0.0, cy = 0.0;
    double pupil_r = 0.0;
    double iris_r = 0.0;
    double upper_lid_y = 0.0; // apex of the upper lid parabola
    double lower_lid_y = 0.0;
    int age = 0;
};

struct SynthItem {
    SampleRecord record;
    EyeAnnotation annotation;
    int subject_idx = 0;
    int session_idx = 0;
};

namespace detail {

// Seed stream tags so anatomy, texture, pixels, and sensor noise never share
// a generator state.
enum SeedTag : uint64_t {
    kTagSubject = 0x01,
    kTagAnatomy = 0x02,
    kTagTexture = 0x03,
    kTagPixels = 0x04,
    kTagSensor = 0x05,
};

struct SubjectProfile {
    int birth_year = 0;
    int first_capture_year = 0;
    int first_age = 0;
    double iris_offset = 0.0;
    double aperture_offset = 0.0;
    double pupil_ratio = 0.34;
};

inline SubjectProfile subject_profile(const SynthParams& p, int subject_idx) {
    Rng rng(mix_seed(p.seed, kTagSubject, static_cast<uint64_t>(subject_idx)));
    SubjectProfile s;
    const int span = p.sessions_per_subject - 1;
    s.first_age = rng.int_range(kMinAge, kMaxAge - span);
    s.first_capture_year = 2016 - span;
    s.birth_year = s.first_capture_year - s.first_age;
    s.iris_offset = 2.5 * rng.normal();
    s.aperture_offset = 2.0 * rng.normal();
    s.pupil_ratio = 0.33 + 0.03 * rng.uniform();
    return s;
}

struct IrisTexture {
    double radial_freq[3] = {3.0, 5.0, 8.0};
    double radial_phase[3] = {0.0, 0.0, 0.0};
    double radial_amp[3] = {0.05, 0.04, 0.03};
    int angular_freq[2] = {11, 17};
    double angular_phase[2] = {0.0, 0.0};
    double angular_amp[2] = {0.035, 0.025};

    double value(double rho, double theta) const {
        double v = 0.32;
        for (int k = 0; k < 3; ++k)
            v += radial_amp[k] * std::sin(2.0 * kPi * radial_freq[k] * rho + radial_phase[k]);
        for (int k = 0; k < 2; ++k)
            v += angular_amp[k] * std::sin(angular_freq[k] * theta + angular_phase[k]);
        return std::clamp(v, 0.18, 0.46);
    }

    static constexpr double kPi = 3.14159265358979323846;
};

inline IrisTexture iris_texture(const SynthParams& p, int subject_idx, EyeSide eye, int age) {
    Rng rng(mix_seed(mix_seed(p.seed, kTagTexture, static_cast<uint64_t>(subject_idx)),
                     eye == EyeSide::Left ? 0u : 1u));
    IrisTexture t;
    const double freq_scale = 1.0 + p.cue_strength * 0.05 * (age - 10);
    const double base[3] = {3.0, 5.0, 8.0};
    for (int k = 0; k < 3; ++k) {
        t.radial_freq[k] = base[k] * freq_scale;
        t.radial_phase[k] = 2.0 * IrisTexture::kPi * rng.uniform();
    }
    for (int k = 0; k < 2; ++k) {
        t.angular_freq[k] = rng.int_range(9, 19);
        t.angular_phase[k] = 2.0 * IrisTexture::kPi * rng.uniform();
    }
    return t;
}

inline double smoothstep(double lo, double hi, double x) {
    const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

} // namespace detail

/// Anatomy for one (subject, session, eye) without touching pixels. The scale
/// reference is a 640x480 frame; other sizes scale proportionally.
inline EyeAnnotation synth_anatomy(const SynthParams& p, int subject_idx, int session_idx,
                                   EyeSide eye) {
    const auto prof = detail::subject_profile(p, subject_idx);
    const int age = prof.first_age + session_idx;
    Rng rng(mix_seed(mix_seed(p.seed, detail::kTagAnatomy, static_cast<uint64_t>(subject_idx)),
                     static_cast<uint64_t>(session_idx), eye == EyeSide::Left ? 0u : 1u));
    const double sx = p.width / 640.0;
    const double sy = p.height / 480.0;
    const double s = 0.5 * (sx + sy);

    EyeAnnotation a;
    a.age = age;
    a.cx = p.width / 2.0 + sx * rng.uniform(-12.0, 12.0);
    a.cy = p.height / 2.0 + sy * rng.uniform(-12.0, 12.0);
    const double cue = p.cue_strength * (age - 10);
    a.iris_r = s * std::max(40.0, 78.0 + 3.2 * cue + prof.iris_offset + rng.normal());
    a.pupil_r = prof.pupil_ratio * a.iris_r;
    const double ap = s * std::max(28.0, 58.0 + 2.2 * cue + prof.aperture_offset + 0.8 * rng.normal());
    a.upper_lid_y = a.cy - ap;
    a.lower_lid_y = a.cy + 0.8 * ap;
    return a;
}

/// Renders one eye frame. Deterministic given (params, subject, session, eye).
inline GrayImage render_eye(const SynthParams& p, int subject_idx, int session_idx, EyeSide eye,
                            const EyeAnnotation& a) {
    constexpr double kPi = detail::IrisTexture::kPi;
    const auto tex = detail::iris_texture(p, subject_idx, eye, a.age);
    Rng rng(mix_seed(mix_seed(p.seed, detail::kTagPixels, static_cast<uint64_t>(subject_idx)),
                     static_cast<uint64_t>(session_idx), eye == EyeSide::Left ? 0u : 1u));
    const double gain = rng.uniform(0.97, 1.03);
    const double skin_phase = 2.0 * kPi * rng.uniform();

    const double ap_u = a.cy - a.upper_lid_y;
    const double ap_l = a.lower_lid_y - a.cy;
    const double fissure_w = 1.9 * a.iris_r;
    const double edge = 1.2; // anti-alias half-width in px

    GrayImage img(p.width, p.height);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            const double dx = x - a.cx;
            const double dy = y - a.cy;
            double v;
            const double u = dx / fissure_w;
            if (std::abs(u) >= 1.0) {
                v = 0.55 + 0.04 * std::sin(2.0 * kPi * 0.013 * y + skin_phase);
            } else {
                const double bow = 1.0 - u * u;
                const double y_up = a.cy - ap_u * bow;
                const double y_lo = a.cy + ap_l * bow;
                if (y < y_up || y > y_lo) {
                    // skin with a dark lash line hugging the upper lid
                    v = 0.55 + 0.04 * std::sin(2.0 * kPi * 0.013 * y + skin_phase);
                    if (y < y_up) {
                        const double d = y_up - y;
                        v -= 0.15 * std::exp(-d * d / 8.0);
                    }
                } else {
                    const double r = std::sqrt(dx * dx + dy * dy);
                    const double d_up = y - y_up;
                    const double d_lo = y_lo - y;
                    double sclera = 0.82 - 0.10 * std::exp(-d_up / 5.0) - 0.08 * std::exp(-d_lo / 5.0);
                    if (r >= a.iris_r + edge) {
                        v = sclera;
                    } else {
                        const double rho =
                            std::clamp((r - a.pupil_r) / std::max(1.0, a.iris_r - a.pupil_r), 0.0, 1.0);
                        const double theta = std::atan2(dy, dx);
                        double iris = tex.value(rho, theta);
                        iris -= 0.05 * detail::smoothstep(0.85, 1.0, rho); // limbic ring
                        double inner = iris;
                        if (r < a.pupil_r + edge) {
                            const double t = detail::smoothstep(a.pupil_r - edge, a.pupil_r + edge, r);
                            inner = 0.07 + t * (iris - 0.07);
                        }
                        const double t = detail::smoothstep(a.iris_r - edge, a.iris_r + edge, r);
                        v = inner + t * (sclera - inner);
                    }
                }
            }
            v = gain * v + 0.008 * rng.normal();
            img.pixels[static_cast<size_t>(y) * p.width + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return img;
}

/// Session plan: which sensor captured each session. The final quarter of a
/// subject's sessions (at least one, when there are two or more) comes from
/// the newer SensorB rig, mimicking a device swap late in the collection.
inline Sensor session_sensor(int session_idx, int sessions_per_subject) {
    if (sessions_per_subject < 2) return Sensor::A;
    const int b_sessions = std::max(1, sessions_per_subject / 4);
    return session_idx >= sessions_per_subject - b_sessions ? Sensor::B : Sensor::A;
}

inline std::string subject_name(int subject_idx) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%04d", subject_idx);
    return buf;
}

/// Lays out records and ground-truth geometry without rendering pixels.
/// With both_eyes=false exactly one record per subject-session is produced
/// (alternating eye side); with both_eyes=true, two.
inline std::vector<SynthItem> synth_plan(const SynthParams& p, bool both_eyes) {
    p.validate();
    std::vector<SynthItem> items;
    items.reserve(static_cast<size_t>(p.subject_count) * p.sessions_per_subject * (both_eyes ? 2 : 1));
    for (int si = 0; si < p.subject_count; ++si) {
        const auto prof = detail::subject_profile(p, si);
        for (int se = 0; se < p.sessions_per_subject; ++se) {
            std::vector<EyeSide> eyes;
            if (both_eyes) eyes = {EyeSide::Left, EyeSide::Right};
            else eyes = {se % 2 == 0 ? EyeSide::Left : EyeSide::Right};
            for (EyeSide eye : eyes) {
                SynthItem it;
                it.subject_idx = si;
                it.session_idx = se;
                it.annotation = synth_anatomy(p, si, se, eye);
                auto& r = it.record;
                r.subject_id = subject_name(si);
                r.birth_year = prof.birth_year;
                r.capture_year = prof.first_capture_year + se;
                r.age = r.capture_year - r.birth_year;
                r.sensor = session_sensor(se, p.sessions_per_subject);
                r.eye_side = eye;
                r.modality = Modality::Eye;
                r.image_path = "images/" + r.subject_id + "_s" + std::to_string(se) +
                               (eye == EyeSide::Left ? "_L" : "_R") + "_eye.png";
                items.push_back(std::move(it));
            }
        }
    }
    return items;
}

inline GrayImage render_item(const SynthParams& p, const SynthItem& it) {
    return render_eye(p, it.subject_idx, it.session_idx, it.record.eye_side, it.annotation);
}

/// Sensor models. SensorA passes through; SensorB applies gain 1.15, a 3x3
/// box blur, additive Gaussian noise, then clamps to [0,1]. The sigma
/// parameter exists so tests can switch the noise off.
inline GrayImage apply_sensor_model(const GrayImage& image, Sensor sensor, uint64_t seed,
                                    double sigma = 0.02) {
    if (sensor == Sensor::A) return image;
    GrayImage out = image;
    for (auto& v : out.pixels) v *= 1.15f;
    out = box_blur3(out);
    if (sigma > 0.0) {
        Rng rng(mix_seed(seed, detail::kTagSensor));
        for (auto& v : out.pixels) v += static_cast<float>(sigma * rng.normal());
    }
    out.clamp01();
    return out;
}

/// One record per subject-session, pre-sensor images in memory.
inline std::pair<std::vector<GrayImage>, std::vector<SampleRecord>> synth_generate(
    const SynthParams& p) {
    const auto items = synth_plan(p, false);
    std::vector<GrayImage> images;
    std::vector<SampleRecord> records;
    images.reserve(items.size());
    records.reserve(items.size());
    for (const auto& it : items) {
        images.push_back(render_item(p, it));
        records.push_back(it.record);
    }
    return {std::move(images), std::move(records)};
}

} // namespace ocularage
