#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "ocularage/rng.hpp"

using namespace ocularage;

TEST_CASE("mix_seed separates streams") {
    CHECK(mix_seed(42) != mix_seed(43));
    CHECK(mix_seed(42, 1) != mix_seed(42, 2));
    CHECK(mix_seed(42, 1, 2) != mix_seed(42, 2, 1));
    CHECK(mix_seed(42, 7) == mix_seed(42, 7));
}

TEST_CASE("same seed reproduces the sequence") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
        CHECK(a.int_range(0, 10) == b.int_range(0, 10));
    }
}

TEST_CASE("uniform stays in range") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform(-2.0, 3.0);
        CHECK(v >= -2.0);
        CHECK(v < 3.0);
    }
}

TEST_CASE("int_range is inclusive on both ends") {
    Rng rng(9);
    bool saw_lo = false, saw_hi = false;
    for (int i = 0; i < 1000; ++i) {
        const auto v = rng.int_range(2, 5);
        CHECK(v >= 2);
        CHECK(v <= 5);
        saw_lo |= v == 2;
        saw_hi |= v == 5;
    }
    CHECK(saw_lo);
    CHECK(saw_hi);
}

TEST_CASE("shuffle permutes without losing elements") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> orig = v;
    Rng rng(11);
    rng.shuffle(v.begin(), v.end());
    CHECK(v != orig); // astronomically unlikely to stay sorted
    std::sort(v.begin(), v.end());
    CHECK(v == orig);
}

TEST_CASE("state round-trip resumes the stream") {
    Rng a(77);
    for (int i = 0; i < 13; ++i) a.uniform();
    const std::string s = a.state();
    Rng b(0);
    b.set_state(s);
    for (int i = 0; i < 50; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("normal has roughly standard moments") {
    Rng rng(5);
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}
