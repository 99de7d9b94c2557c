#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ocularage/errors.hpp"

namespace ocularage {

enum class Sensor { A, B };
enum class EyeSide { Left, Right };
enum class Modality { Eye, Iris };
enum class AgeGroup { Young, Old }; // Young: 4-9, Old: 10-16

constexpr int kMinAge = 4;
constexpr int kMaxAge = 16;

inline const char* to_string(Sensor s) { return s == Sensor::A ? "A" : "B"; }
inline const char* to_string(EyeSide e) { return e == EyeSide::Left ? "L" : "R"; }
inline const char* to_string(Modality m) { return m == Modality::Eye ? "eye" : "iris"; }
inline const char* to_string(AgeGroup g) { return g == AgeGroup::Young ? "young" : "old"; }

/// Age at capture, in whole years; session month is ignored.
inline int compute_age(int birth_year, int capture_year) {
    if (capture_year < birth_year)
        throw ManifestParseError("capture_year precedes birth_year");
    const int age = capture_year - birth_year;
    if (age < kMinAge || age > kMaxAge)
        throw OutOfStudyRange("age " + std::to_string(age) + " outside study range 4..16");
    return age;
}

inline AgeGroup assign_age_group(int age) {
    if (age < kMinAge || age > kMaxAge)
        throw OutOfStudyRange("age " + std::to_string(age) + " outside study range 4..16");
    return age <= 9 ? AgeGroup::Young : AgeGroup::Old;
}

/// One image's metadata row. `age` is always derived, never stored.
struct SampleRecord {
    std::string subject_id;
    int birth_year = 0;
    int capture_year = 0;
    int age = 0;
    Sensor sensor = Sensor::A;
    EyeSide eye_side = EyeSide::Left;
    Modality modality = Modality::Eye;
    std::string image_path; // relative to the workspace root

    bool operator==(const SampleRecord&) const = default;

    /// Cache/report id: image filename without directory or extension.
    std::string id() const {
        return std::filesystem::path(image_path).stem().string();
    }
};

inline const char* kManifestHeader = "subject_id,birth_year,capture_year,sensor,eye_side,modality,image_path";

inline void write_manifest(const std::string& path, const std::vector<SampleRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << kManifestHeader << "\n";
    for (const auto& r : records) {
        out << r.subject_id << ',' << r.birth_year << ',' << r.capture_year << ','
            << to_string(r.sensor) << ',' << to_string(r.eye_side) << ','
            << to_string(r.modality) << ',' << r.image_path << "\n";
    }
    if (!out.flush()) throw IoError("failed writing manifest: " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline int parse_int_field(const std::string& s, int line_no, const char* what) {
    try {
        size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ManifestParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

} // namespace detail

inline std::vector<SampleRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw SchemaError("empty manifest: " + path);
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != kManifestHeader)
        throw SchemaError("manifest header mismatch, expected '" + std::string(kManifestHeader) + "'");

    std::vector<SampleRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 7)
            throw ManifestParseError("line " + std::to_string(line_no) + ": expected 7 columns, got " +
                                     std::to_string(fields.size()));
        SampleRecord r;
        r.subject_id = fields[0];
        r.birth_year = detail::parse_int_field(fields[1], line_no, "birth_year");
        r.capture_year = detail::parse_int_field(fields[2], line_no, "capture_year");
        if (fields[3] == "A") r.sensor = Sensor::A;
        else if (fields[3] == "B") r.sensor = Sensor::B;
        else throw ManifestParseError("line " + std::to_string(line_no) + ": bad sensor '" + fields[3] + "'");
        if (fields[4] == "L") r.eye_side = EyeSide::Left;
        else if (fields[4] == "R") r.eye_side = EyeSide::Right;
        else throw ManifestParseError("line " + std::to_string(line_no) + ": bad eye_side '" + fields[4] + "'");
        if (fields[5] == "eye") r.modality = Modality::Eye;
        else if (fields[5] == "iris") r.modality = Modality::Iris;
        else throw ManifestParseError("line " + std::to_string(line_no) + ": bad modality '" + fields[5] + "'");
        r.image_path = fields[6];
        if (r.subject_id.empty())
            throw ManifestParseError("line " + std::to_string(line_no) + ": empty subject_id");
        try {
            r.age = compute_age(r.birth_year, r.capture_year);
        } catch (const OutOfStudyRange& e) {
            throw ManifestParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        records.push_back(std::move(r));
    }
    return records;
}

/// Checks that each record's image file exists under `workspace`.
inline void validate_manifest_paths(const std::vector<SampleRecord>& records, const std::string& workspace) {
    for (const auto& r : records) {
        const auto p = std::filesystem::path(workspace) / r.image_path;
        if (!std::filesystem::exists(p))
            throw ManifestParseError("missing image file: " + p.string());
    }
}

} // namespace ocularage
