#pragma once

#include <set>
#include <string>
#include <vector>

#include "ocularage/augment.hpp"
#include "ocularage/config.hpp"
#include "ocularage/image.hpp"
#include "ocularage/manifest.hpp"
#include "ocularage/png_io.hpp"
#include "ocularage/rubber_sheet.hpp"
#include "ocularage/split.hpp"
#include "ocularage/standardize.hpp"

namespace ocularage {

constexpr int kEyeWidth = 320;
constexpr int kEyeHeight = 240;

/// One loaded sample; exactly one of (eye, iris) is populated depending on
/// the store's modality. Eye frames are kept at 320x240 in 8-bit form.
struct DataSample {
    SampleRecord rec;
    GrayImageU8 eye;
    NormalizedIris iris;
};

struct DataStore {
    Modality modality = Modality::Eye;
    std::vector<DataSample> samples;
};

inline std::set<std::string> read_exclusions(const std::string& path) {
    std::set<std::string> out;
    std::ifstream in(path);
    if (!in) return out; // missing exclusion log means nothing was excluded
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        out.insert(line.substr(0, comma));
    }
    return out;
}

inline void write_exclusions(const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write exclusions file: " + path);
    out << "id,reason\n";
    for (const auto& [id, reason] : rows) out << id << ',' << reason << "\n";
    if (!out.flush()) throw IoError("failed writing exclusions file: " + path);
}

/// Loads every non-excluded manifest record for the requested modality.
/// Eye records are resized on ingest; iris input comes from the preprocess
/// cache keyed by the record id (manifest rows that already point at strips
/// are honored directly).
inline DataStore load_datastore(const RunConfig& cfg, const std::vector<SampleRecord>& manifest,
                                Modality modality, const std::set<std::string>& excluded) {
    DataStore store;
    store.modality = modality;
    store.samples.reserve(manifest.size());
    for (const auto& rec : manifest) {
        if (excluded.count(rec.id())) continue;
        DataSample s;
        s.rec = rec;
        if (modality == Modality::Eye) {
            if (rec.modality != Modality::Eye)
                throw DataError("eye training requires eye-modality rows, got iris row " + rec.id());
            const GrayImage full = read_gray_png(cfg.resolve(rec.image_path));
            s.eye = quantize_u8(resize(full, kEyeWidth, kEyeHeight));
        } else {
            if (rec.modality == Modality::Iris) {
                const std::string strip_file = cfg.resolve(rec.image_path);
                std::string mask_file = strip_file;
                const auto pos = mask_file.rfind("_strip.png");
                if (pos == std::string::npos)
                    throw DataError("iris manifest row must point at a *_strip.png: " + rec.image_path);
                mask_file.replace(pos, std::string::npos, "_mask.png");
                s.iris = read_normalized(strip_file, mask_file);
            } else {
                s.iris = read_normalized_cached(cfg.resolve(cfg.cache_dir), rec.id());
            }
        }
        store.samples.push_back(std::move(s));
    }
    if (store.samples.empty()) throw EmptyDataset("no usable samples after exclusions");
    return store;
}

inline GrayImage eye_as_float(const DataSample& s) { return s.eye.to_float(); }

inline PixelStats measure_stats(const DataStore& store, const std::vector<int>& indices) {
    StatsAccumulator acc;
    for (int i : indices) {
        const auto& s = store.samples[static_cast<size_t>(i)];
        if (store.modality == Modality::Eye) acc.add(eye_as_float(s));
        else acc.add_strip(s.iris);
    }
    return acc.finalize();
}

inline PixelStats pick_stats(const RunConfig& cfg, const DataStore& store,
                             const std::vector<int>& train_indices) {
    switch (cfg.stats_source) {
        case StatsSource::EyePreset: return kEyeStatsPreset;
        case StatsSource::IrisPreset: return kIrisStatsPreset;
        default: return measure_stats(store, train_indices);
    }
}

/// Materializes the network input for one sample; augmentation only when
/// requested (training path).
inline Tensor sample_tensor(const DataStore& store, int index, bool augmented,
                            const AugmentPolicy& policy, uint64_t aug_seed,
                            const PixelStats& stats) {
    const auto& s = store.samples[static_cast<size_t>(index)];
    if (store.modality == Modality::Eye) {
        GrayImage img = eye_as_float(s);
        if (augmented) img = augment(img, policy, aug_seed);
        return standardize_eye(img, stats);
    }
    if (augmented) {
        const NormalizedIris aug = augment_iris(s.iris, policy, aug_seed);
        return standardize_iris(aug, stats);
    }
    return standardize_iris(s.iris, stats);
}

struct SplitIndices {
    std::vector<int> train, val, test;
};

/// Maps store samples onto the subject split; the sensor filter restricts
/// train/val (the cross-sensor protocol trains on one device) while test
/// keeps every sensor for paired evaluation.
inline SplitIndices index_by_split(const DataStore& store, const SplitAssignment& split,
                                   SensorFilter filter) {
    SplitIndices out;
    for (size_t i = 0; i < store.samples.size(); ++i) {
        const auto& rec = store.samples[i].rec;
        const SplitKind kind = split.lookup(rec.subject_id);
        const bool sensor_ok = filter == SensorFilter::Both ||
                               (filter == SensorFilter::OnlyA && rec.sensor == Sensor::A) ||
                               (filter == SensorFilter::OnlyB && rec.sensor == Sensor::B);
        switch (kind) {
            case SplitKind::Train:
                if (sensor_ok) out.train.push_back(static_cast<int>(i));
                break;
            case SplitKind::Val:
                if (sensor_ok) out.val.push_back(static_cast<int>(i));
                break;
            case SplitKind::Test: out.test.push_back(static_cast<int>(i)); break;
        }
    }
    return out;
}

} // namespace ocularage
