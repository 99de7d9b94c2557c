#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ocularage/synth.hpp"

using namespace ocularage;

namespace {

SynthParams small_params() {
    SynthParams p;
    p.subject_count = 6;
    p.sessions_per_subject = 4;
    p.width = 320;
    p.height = 240;
    p.seed = 42;
    return p;
}

} // namespace

TEST_CASE("plan produces the expected record grid") {
    const SynthParams p = small_params();
    const auto one = synth_plan(p, false);
    CHECK(one.size() == 6u * 4u);
    const auto two = synth_plan(p, true);
    CHECK(two.size() == 6u * 4u * 2u);

    std::set<std::string> ids;
    for (const auto& it : two) {
        CHECK(it.record.age >= kMinAge);
        CHECK(it.record.age <= kMaxAge);
        CHECK(it.record.age == it.record.capture_year - it.record.birth_year);
        CHECK(it.record.modality == Modality::Eye);
        CHECK(ids.insert(it.record.id()).second); // unique ids
    }
}

TEST_CASE("ages advance one year per session") {
    const auto items = synth_plan(small_params(), false);
    for (const auto& it : items)
        if (it.session_idx > 0) {
            const auto& prev = items[static_cast<size_t>(it.subject_idx) * 4 +
                                     static_cast<size_t>(it.session_idx) - 1];
            CHECK(it.record.age == prev.record.age + 1);
        }
}

TEST_CASE("too many sessions would leave the study range") {
    SynthParams p = small_params();
    p.sessions_per_subject = 14;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.sessions_per_subject = 13;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("later sessions switch to the second sensor") {
    CHECK(session_sensor(0, 1) == Sensor::A);
    CHECK(session_sensor(0, 4) == Sensor::A);
    CHECK(session_sensor(2, 4) == Sensor::A);
    CHECK(session_sensor(3, 4) == Sensor::B);
    CHECK(session_sensor(7, 8) == Sensor::B);
    CHECK(session_sensor(6, 8) == Sensor::B); // 8/4 = 2 trailing B sessions
    CHECK(session_sensor(5, 8) == Sensor::A);
}

TEST_CASE("anatomy stays inside the frame and ordered") {
    const SynthParams p = small_params();
    for (const auto& it : synth_plan(p, true)) {
        const EyeAnnotation& a = it.annotation;
        CHECK(a.pupil_r > 0.0);
        CHECK(a.pupil_r < a.iris_r);
        CHECK(a.upper_lid_y < a.cy);
        CHECK(a.lower_lid_y > a.cy);
        CHECK(a.cx > a.iris_r * 0.5);
        CHECK(a.cx < p.width - a.iris_r * 0.5);
    }
}

TEST_CASE("age cue enlarges the iris monotonically on average") {
    SynthParams p = small_params();
    p.subject_count = 40;
    p.sessions_per_subject = 1;
    p.cue_strength = 1.0;
    double young_sum = 0.0, old_sum = 0.0;
    int young_n = 0, old_n = 0;
    for (const auto& it : synth_plan(p, false)) {
        if (it.record.age <= 7) {
            young_sum += it.annotation.iris_r;
            ++young_n;
        } else if (it.record.age >= 13) {
            old_sum += it.annotation.iris_r;
            ++old_n;
        }
    }
    REQUIRE(young_n > 0);
    REQUIRE(old_n > 0);
    CHECK(old_sum / old_n > young_sum / young_n);
}

TEST_CASE("rendering is deterministic and in range") {
    const SynthParams p = small_params();
    const auto items = synth_plan(p, false);
    const GrayImage a = render_item(p, items[0]);
    const GrayImage b = render_item(p, items[0]);
    REQUIRE(a.pixels.size() == b.pixels.size());
    for (size_t i = 0; i < a.pixels.size(); ++i) REQUIRE(a.pixels[i] == b.pixels[i]);
    for (float v : a.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    CHECK(a.width == p.width);
    CHECK(a.height == p.height);
}

TEST_CASE("pupil is darker than the surrounding iris") {
    const SynthParams p = small_params();
    const auto items = synth_plan(p, false);
    const auto& ann = items[0].annotation;
    const GrayImage img = render_item(p, items[0]);
    const float pupil = img.at(static_cast<int>(ann.cx), static_cast<int>(ann.cy));
    const float iris = img.at(static_cast<int>(ann.cx + 0.5 * (ann.pupil_r + ann.iris_r)),
                              static_cast<int>(ann.cy));
    CHECK(pupil < iris);
    CHECK(pupil < 0.15f);
}

TEST_CASE("sensor A passes through, sensor B degrades") {
    const SynthParams p = small_params();
    const auto items = synth_plan(p, false);
    const GrayImage img = render_item(p, items[0]);

    const GrayImage same = apply_sensor_model(img, Sensor::A, 99);
    for (size_t i = 0; i < img.pixels.size(); ++i) REQUIRE(same.pixels[i] == img.pixels[i]);

    const GrayImage b1 = apply_sensor_model(img, Sensor::B, 99);
    const GrayImage b2 = apply_sensor_model(img, Sensor::B, 99);
    for (size_t i = 0; i < b1.pixels.size(); ++i) REQUIRE(b1.pixels[i] == b2.pixels[i]);
    const GrayImage b3 = apply_sensor_model(img, Sensor::B, 100);
    bool differs = false;
    for (size_t i = 0; i < b1.pixels.size(); ++i) differs |= b1.pixels[i] != b3.pixels[i];
    CHECK(differs); // noise depends on the seed

    // gain brightens on average despite blur and clamping
    CHECK(mean_intensity(apply_sensor_model(img, Sensor::B, 99, 0.0)) > mean_intensity(img));
    for (float v : b1.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("synth_generate pairs images with records") {
    SynthParams p = small_params();
    p.subject_count = 3;
    const auto [images, records] = synth_generate(p);
    REQUIRE(images.size() == records.size());
    CHECK(images.size() == 3u * 4u);
}

TEST_CASE("params validate ranges") {
    SynthParams p = small_params();
    p.subject_count = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = small_params();
    p.width = 50;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = small_params();
    p.cue_strength = -0.1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
