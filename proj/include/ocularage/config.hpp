#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ocularage/augment.hpp"
#include "ocularage/errors.hpp"
#include "ocularage/manifest.hpp"
#include "ocularage/segmentation.hpp"
#include "ocularage/standardize.hpp"
#include "ocularage/synth.hpp"

namespace ocularage {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    double lr = 0.001;
    double weight_decay = 0.01;
    int patience = 5;
    double alpha0 = 0.25;
    double label_smoothing = 0.05;
    double focal_gamma = 2.0;
    uint64_t seed = 42;
    Modality modality = Modality::Eye;
    double min_lr = 1e-5;
    int t0 = 10;
    double cycle_mult = 2.0;

    void validate() const {
        if (epochs < 1 || batch_size < 1 || patience < 1 || t0 < 1)
            throw ConfigError("train: counts must be positive");
        if (lr <= 0 || weight_decay < 0 || alpha0 <= 0 || focal_gamma < 0 || min_lr <= 0 ||
            cycle_mult < 1.0)
            throw ConfigError("train: rates must be positive");
        if (label_smoothing < 0.0 || label_smoothing > 0.2)
            throw ConfigError("train: label_smoothing must lie in [0, 0.2]");
        if (min_lr > lr) throw ConfigError("train: min_lr must not exceed lr");
    }
};

enum class StatsSource { Measured, EyePreset, IrisPreset };
enum class SensorFilter { Both, OnlyA, OnlyB };

struct RunConfig {
    // paths, workspace-relative unless absolute
    std::string workspace = "workspace";
    std::string manifest = "manifest.csv";
    std::string split_file = "split.csv";
    std::string cache_dir = "cache";
    std::string reports_dir = "reports";
    std::string checkpoint = "model.ckpt";
    std::string history = "history.csv";
    int workers = 1;

    SynthParams synth;
    SegmentationConfig seg;
    AugmentPolicy augment;
    TrainConfig train;
    StatsSource stats_source = StatsSource::Measured;
    SensorFilter sensor_filter = SensorFilter::Both;

    int bench_iterations = 1000;
    int bench_warmup = 100;

    std::string resolve(const std::string& rel) const {
        if (!rel.empty() && rel.front() == '/') return rel;
        return workspace + "/" + rel;
    }

    void validate() const {
        synth.validate();
        seg.validate();
        augment.validate();
        train.validate();
        if (workers < 1) throw ConfigError("workspace: workers must be >= 1");
        if (bench_iterations < 1 || bench_warmup < 0)
            throw ConfigError("bench: iteration counts out of range");
    }
};

namespace toml {

struct Value {
    enum class Kind { Str, Int, Float, Bool } kind = Kind::Str;
    std::string s;
    int64_t i = 0;
    double f = 0.0;
    bool b = false;
    int line = 0;
};

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// Parses the strict subset used by the run configs: [section] headers and
/// scalar key = value pairs (quoted strings, booleans, integers, floats).
inline std::map<std::string, Value> parse(std::istream& in, const std::string& origin) {
    std::map<std::string, Value> out;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // strip comments outside strings
        bool in_str = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            else if (line[i] == '#' && !in_str) {
                line.erase(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto fail = [&](const std::string& msg) -> void {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail("empty section name");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (key.empty() || raw.empty()) fail("expected key = value");
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) fail("duplicate key: " + full);

        Value v;
        v.line = line_no;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"') fail("unterminated string");
            v.kind = Value::Kind::Str;
            v.s = raw.substr(1, raw.size() - 2);
        } else if (raw == "true" || raw == "false") {
            v.kind = Value::Kind::Bool;
            v.b = raw == "true";
        } else {
            // number: integer when it parses fully without . e E
            const bool floaty = raw.find_first_of(".eE") != std::string::npos;
            size_t used = 0;
            bool parsed = true;
            try {
                if (floaty) {
                    v.kind = Value::Kind::Float;
                    v.f = std::stod(raw, &used);
                } else {
                    v.kind = Value::Kind::Int;
                    v.i = std::stoll(raw, &used, 10);
                    v.f = static_cast<double>(v.i);
                }
            } catch (const std::exception&) {
                parsed = false;
            }
            if (!parsed) fail("malformed value: " + raw);
            if (used != raw.size()) fail("malformed number: " + raw);
        }
        out.emplace(full, v);
    }
    return out;
}

class Reader {
public:
    Reader(std::map<std::string, Value> values, std::string origin)
        : values_(std::move(values)), origin_(std::move(origin)) {}

    int64_t get_int(const std::string& key, int64_t def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::Int) bad_type(key, "integer", v);
        return v->i;
    }

    double get_double(const std::string& key, double def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::Int && v->kind != Value::Kind::Float)
            bad_type(key, "number", v);
        return v->f;
    }

    bool get_bool(const std::string& key, bool def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::Bool) bad_type(key, "boolean", v);
        return v->b;
    }

    std::string get_string(const std::string& key, const std::string& def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::Str) bad_type(key, "string", v);
        return v->s;
    }

    void reject_unknown() const {
        for (const auto& [key, v] : values_) {
            if (!consumed_.count(key))
                throw ConfigError(origin_ + ":" + std::to_string(v.line) + ": unknown key: " + key);
        }
    }

private:
    const Value* take(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return nullptr;
        consumed_.insert(key);
        return &it->second;
    }

    [[noreturn]] void bad_type(const std::string& key, const char* want, const Value* v) {
        throw ConfigError(origin_ + ":" + std::to_string(v->line) + ": key " + key +
                          " must be a " + want);
    }

    std::map<std::string, Value> values_;
    std::set<std::string> consumed_;
    std::string origin_;
};

} // namespace toml

inline RunConfig parse_run_config(std::istream& in, const std::string& origin) {
    toml::Reader r(toml::parse(in, origin), origin);
    RunConfig c;

    c.workspace = r.get_string("workspace.dir", c.workspace);
    c.manifest = r.get_string("workspace.manifest", c.manifest);
    c.split_file = r.get_string("workspace.split", c.split_file);
    c.cache_dir = r.get_string("workspace.cache_dir", c.cache_dir);
    c.reports_dir = r.get_string("workspace.reports_dir", c.reports_dir);
    c.checkpoint = r.get_string("workspace.checkpoint", c.checkpoint);
    c.history = r.get_string("workspace.history", c.history);
    c.workers = static_cast<int>(r.get_int("workspace.workers", c.workers));

    c.synth.subject_count = static_cast<int>(r.get_int("synth.subject_count", c.synth.subject_count));
    c.synth.sessions_per_subject =
        static_cast<int>(r.get_int("synth.sessions_per_subject", c.synth.sessions_per_subject));
    c.synth.width = static_cast<int>(r.get_int("synth.width", c.synth.width));
    c.synth.height = static_cast<int>(r.get_int("synth.height", c.synth.height));
    c.synth.cue_strength = r.get_double("synth.cue_strength", c.synth.cue_strength);
    c.synth.seed = static_cast<uint64_t>(r.get_int("synth.seed", static_cast<int64_t>(c.synth.seed)));

    c.seg.pupil_r_min_frac = r.get_double("preproc.pupil_r_min_frac", c.seg.pupil_r_min_frac);
    c.seg.pupil_r_max_frac = r.get_double("preproc.pupil_r_max_frac", c.seg.pupil_r_max_frac);
    c.seg.iris_r_max_frac = r.get_double("preproc.iris_r_max_frac", c.seg.iris_r_max_frac);
    c.seg.pupil_min_response = r.get_double("preproc.pupil_min_response", c.seg.pupil_min_response);
    c.seg.iris_min_response = r.get_double("preproc.iris_min_response", c.seg.iris_min_response);
    c.seg.pupil_interior_max_mean =
        r.get_double("preproc.pupil_interior_max_mean", c.seg.pupil_interior_max_mean);
    const std::string stats = r.get_string("preproc.stats", "measured");
    if (stats == "measured") c.stats_source = StatsSource::Measured;
    else if (stats == "eye_preset") c.stats_source = StatsSource::EyePreset;
    else if (stats == "iris_preset") c.stats_source = StatsSource::IrisPreset;
    else throw ConfigError("preproc.stats must be measured, eye_preset, or iris_preset");

    c.augment.flip_prob = r.get_double("augment.flip_prob", c.augment.flip_prob);
    c.augment.max_rotation = r.get_double("augment.max_rotation", c.augment.max_rotation);
    c.augment.max_translate = r.get_double("augment.max_translate", c.augment.max_translate);
    c.augment.scale_min = r.get_double("augment.scale_min", c.augment.scale_min);
    c.augment.scale_max = r.get_double("augment.scale_max", c.augment.scale_max);
    c.augment.blur_prob = r.get_double("augment.blur_prob", c.augment.blur_prob);
    c.augment.blur_sigma = r.get_double("augment.blur_sigma", c.augment.blur_sigma);
    c.augment.sharpness_prob = r.get_double("augment.sharpness_prob", c.augment.sharpness_prob);
    c.augment.autocontrast_prob =
        r.get_double("augment.autocontrast_prob", c.augment.autocontrast_prob);

    c.train.epochs = static_cast<int>(r.get_int("train.epochs", c.train.epochs));
    c.train.batch_size = static_cast<int>(r.get_int("train.batch_size", c.train.batch_size));
    c.train.lr = r.get_double("train.lr", c.train.lr);
    c.train.weight_decay = r.get_double("train.weight_decay", c.train.weight_decay);
    c.train.patience = static_cast<int>(r.get_int("train.patience", c.train.patience));
    c.train.alpha0 = r.get_double("train.alpha0", c.train.alpha0);
    c.train.label_smoothing = r.get_double("train.label_smoothing", c.train.label_smoothing);
    c.train.focal_gamma = r.get_double("train.focal_gamma", c.train.focal_gamma);
    c.train.seed = static_cast<uint64_t>(r.get_int("train.seed", static_cast<int64_t>(c.train.seed)));
    c.train.min_lr = r.get_double("train.min_lr", c.train.min_lr);
    c.train.t0 = static_cast<int>(r.get_int("train.t0", c.train.t0));
    c.train.cycle_mult = r.get_double("train.cycle_mult", c.train.cycle_mult);
    const std::string modality = r.get_string("train.modality", "eye");
    if (modality == "eye") c.train.modality = Modality::Eye;
    else if (modality == "iris") c.train.modality = Modality::Iris;
    else throw ConfigError("train.modality must be eye or iris");
    const std::string sensor = r.get_string("train.sensor_filter", "both");
    if (sensor == "both") c.sensor_filter = SensorFilter::Both;
    else if (sensor == "A") c.sensor_filter = SensorFilter::OnlyA;
    else if (sensor == "B") c.sensor_filter = SensorFilter::OnlyB;
    else throw ConfigError("train.sensor_filter must be A, B, or both");

    c.bench_iterations = static_cast<int>(r.get_int("bench.iterations", c.bench_iterations));
    c.bench_warmup = static_cast<int>(r.get_int("bench.warmup", c.bench_warmup));

    r.reject_unknown();
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_run_config(in, path);
}

/// OCULARAGE_WORKSPACE, when set, overrides the configured workspace dir.
inline void apply_env_overrides(RunConfig& c) {
    if (const char* ws = std::getenv("OCULARAGE_WORKSPACE")) {
        if (*ws) c.workspace = ws;
    }
}

} // namespace ocularage
