#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "ocularage/rng.hpp"
#include "ocularage/split.hpp"

using namespace ocularage;
namespace fs = std::filesystem;

namespace {

// Manifest rows with consecutive yearly captures per subject, like the
// real collection protocol would produce.
std::vector<SampleRecord> random_manifest(Rng& rng, int subjects) {
    std::vector<SampleRecord> records;
    for (int s = 0; s < subjects; ++s) {
        const int sessions = static_cast<int>(rng.int_range(2, 8));
        const int first_age = static_cast<int>(rng.int_range(kMinAge, kMaxAge - sessions + 1));
        const int birth_year = 2016 - first_age - sessions + 1;
        for (int k = 0; k < sessions; ++k) {
            SampleRecord r;
            r.subject_id = "P" + std::to_string(s);
            r.birth_year = birth_year;
            r.capture_year = birth_year + first_age + k;
            r.age = first_age + k;
            r.image_path = "images/P" + std::to_string(s) + "_" + std::to_string(k) + ".png";
            records.push_back(std::move(r));
        }
    }
    return records;
}

std::set<std::string> all_subjects(const std::vector<SampleRecord>& m) {
    std::set<std::string> out;
    for (const auto& r : m) out.insert(r.subject_id);
    return out;
}

int images_of(const std::vector<SampleRecord>& m, const std::set<std::string>& subjects) {
    int n = 0;
    for (const auto& r : m) n += subjects.count(r.subject_id) ? 1 : 0;
    return n;
}

} // namespace

TEST_CASE("1000 random manifests: exclusive, covering, within 3 points") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const int subjects = static_cast<int>(rng.int_range(20, 80));
        const auto manifest = random_manifest(rng, subjects);
        const auto split = subject_exclusive_split(manifest, {0.8, 0.1, 0.1},
                                                   static_cast<uint64_t>(trial));

        // partition of the subject set
        std::set<std::string> seen;
        for (const auto* s : {&split.train, &split.val, &split.test}) {
            for (const auto& id : *s) {
                REQUIRE(seen.insert(id).second); // no overlap
            }
            REQUIRE(!s->empty());
        }
        REQUIRE(seen == all_subjects(manifest));

        // image fractions within +-3 points of 80/10/10
        const double total = static_cast<double>(manifest.size());
        const double ft = images_of(manifest, split.train) / total;
        const double fv = images_of(manifest, split.val) / total;
        const double fe = images_of(manifest, split.test) / total;
        REQUIRE(std::abs(ft - 0.8) <= 0.03);
        REQUIRE(std::abs(fv - 0.1) <= 0.03);
        REQUIRE(std::abs(fe - 0.1) <= 0.03);
    }
}

TEST_CASE("split is deterministic in manifest and seed") {
    Rng rng(7);
    const auto manifest = random_manifest(rng, 30);
    const auto a = subject_exclusive_split(manifest, {0.8, 0.1, 0.1}, 42);
    const auto b = subject_exclusive_split(manifest, {0.8, 0.1, 0.1}, 42);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    const auto c = subject_exclusive_split(manifest, {0.8, 0.1, 0.1}, 43);
    CHECK((a.train != c.train || a.val != c.val || a.test != c.test));
}

TEST_CASE("all images of one subject land in one split") {
    Rng rng(9);
    const auto manifest = random_manifest(rng, 25);
    const auto split = subject_exclusive_split(manifest);
    for (const auto& r : manifest) CHECK_NOTHROW(split.lookup(r.subject_id));
    CHECK_THROWS_AS(split.lookup("nobody"), DataError);
}

TEST_CASE("each split sees both age groups when the manifest permits") {
    // 15 all-young and 15 all-old single-image subjects
    std::vector<SampleRecord> manifest;
    for (int s = 0; s < 30; ++s) {
        SampleRecord r;
        r.subject_id = "Q" + std::to_string(s);
        r.age = s < 15 ? 6 : 14;
        r.birth_year = 2016 - r.age;
        r.capture_year = 2016;
        r.image_path = "images/Q" + std::to_string(s) + ".png";
        manifest.push_back(std::move(r));
    }
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const auto split = subject_exclusive_split(manifest, {0.8, 0.1, 0.1}, seed);
        for (const auto* s : {&split.train, &split.val, &split.test}) {
            bool young = false, old = false;
            for (const auto& id : *s) {
                for (const auto& r : manifest)
                    if (r.subject_id == id) (assign_age_group(r.age) == AgeGroup::Young ? young : old) = true;
            }
            CHECK(young);
            CHECK(old);
        }
    }
}

TEST_CASE("too few subjects is an error") {
    Rng rng(1);
    const auto manifest = random_manifest(rng, 2);
    CHECK_THROWS_AS(subject_exclusive_split(manifest), InsufficientSubjects);
    CHECK_THROWS_AS(subject_exclusive_split({}), DataError);
}

TEST_CASE("three subjects spread across the three splits") {
    Rng rng(4);
    const auto manifest = random_manifest(rng, 3);
    const auto split = subject_exclusive_split(manifest);
    CHECK(split.train.size() == 1);
    CHECK(split.val.size() == 1);
    CHECK(split.test.size() == 1);
}

TEST_CASE("split file round-trip") {
    Rng rng(12);
    const auto manifest = random_manifest(rng, 24);
    const auto split = subject_exclusive_split(manifest);
    const fs::path dir = fs::temp_directory_path() / "oa_split_test";
    fs::create_directories(dir);
    const std::string path = (dir / "split.csv").string();
    write_split(path, split);
    const auto back = read_split(path);
    CHECK(back.train == split.train);
    CHECK(back.val == split.val);
    CHECK(back.test == split.test);
    fs::remove_all(dir);
}

TEST_CASE("split reader rejects bad rows") {
    const fs::path dir = fs::temp_directory_path() / "oa_split_bad";
    fs::create_directories(dir);
    const std::string path = (dir / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "subject_id,split\nS1,sideways\n";
    }
    CHECK_THROWS_AS(read_split(path), DataError);
    fs::remove_all(dir);
}
