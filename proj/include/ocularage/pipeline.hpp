#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ocularage/bench.hpp"
#include "ocularage/checkpoint.hpp"
#include "ocularage/dataset.hpp"
#include "ocularage/report_io.hpp"
#include "ocularage/saliency.hpp"
#include "ocularage/train.hpp"

namespace ocularage {

inline constexpr const char* kExclusionsFile = "exclusions.csv";

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

struct SynthSummary {
    int images = 0;
    std::string manifest_path;
};

/// Renders both eyes for every subject-session, applies the per-record
/// sensor model, writes PNGs plus the manifest.
inline SynthSummary cmd_synth(const RunConfig& cfg) {
    cfg.synth.validate();
    ensure_dir(cfg.workspace);
    ensure_dir(cfg.resolve("images"));
    const auto items = synth_plan(cfg.synth, true);
    std::vector<SampleRecord> records;
    records.reserve(items.size());
    for (const auto& it : items) {
        GrayImage img = render_item(cfg.synth, it);
        const uint64_t sensor_seed =
            mix_seed(mix_seed(cfg.synth.seed, static_cast<uint64_t>(it.subject_idx),
                              static_cast<uint64_t>(it.session_idx)),
                     it.record.eye_side == EyeSide::Right ? 2u : 1u);
        img = apply_sensor_model(img, it.record.sensor, sensor_seed);
        write_gray_png(cfg.resolve(it.record.image_path), quantize_u8(img));
        records.push_back(it.record);
    }
    write_manifest(cfg.resolve(cfg.manifest), records);
    SynthSummary s;
    s.images = static_cast<int>(records.size());
    s.manifest_path = cfg.resolve(cfg.manifest);
    return s;
}

struct PreprocessSummary {
    int processed = 0;
    int excluded = 0;
    std::string exclusions_path;
};

/// Segments every eye image and caches the normalized strip and mask.
/// Segmentation failures are logged, not fatal.
inline PreprocessSummary cmd_preprocess(const RunConfig& cfg) {
    const auto manifest = read_manifest(cfg.resolve(cfg.manifest));
    validate_manifest_paths(manifest, cfg.workspace);
    ensure_dir(cfg.resolve(cfg.cache_dir));
    std::vector<std::pair<std::string, std::string>> exclusions;
    PreprocessSummary s;
    for (const auto& rec : manifest) {
        if (rec.modality != Modality::Eye) continue; // row already points at a strip
        const GrayImage img = read_gray_png(cfg.resolve(rec.image_path));
        try {
            const IrisAnnulus ann = locate_boundaries(img, cfg.seg);
            const NormalizedIris n = rubber_sheet(img, ann);
            write_normalized(cfg.resolve(cfg.cache_dir), rec.id(), n);
            ++s.processed;
        } catch (const SegmentationFailure& e) {
            exclusions.emplace_back(rec.id(), e.what());
        }
    }
    s.exclusions_path = cfg.resolve(kExclusionsFile);
    write_exclusions(s.exclusions_path, exclusions);
    s.excluded = static_cast<int>(exclusions.size());
    return s;
}

struct SplitSummary {
    int train_subjects = 0;
    int val_subjects = 0;
    int test_subjects = 0;
    std::string split_path;
};

inline SplitSummary cmd_split(const RunConfig& cfg) {
    const auto manifest = read_manifest(cfg.resolve(cfg.manifest));
    const auto split = subject_exclusive_split(manifest, {0.8, 0.1, 0.1}, cfg.train.seed);
    SplitSummary s;
    s.split_path = cfg.resolve(cfg.split_file);
    write_split(s.split_path, split);
    s.train_subjects = static_cast<int>(split.train.size());
    s.val_subjects = static_cast<int>(split.val.size());
    s.test_subjects = static_cast<int>(split.test.size());
    return s;
}

struct TrainSummary {
    int best_epoch = 0;
    double best_val_loss = 0.0;
    int epochs_run = 0;
    std::string checkpoint_path;
    std::string history_path;
};

inline TrainSummary cmd_train(const RunConfig& cfg) {
    const auto manifest = read_manifest(cfg.resolve(cfg.manifest));
    const auto excluded = read_exclusions(cfg.resolve(kExclusionsFile));
    const DataStore store = load_datastore(cfg, manifest, cfg.train.modality, excluded);
    const auto split = read_split(cfg.resolve(cfg.split_file));
    TrainResult result = train_model(cfg, store, split);
    TrainSummary s;
    s.checkpoint_path = cfg.resolve(cfg.checkpoint);
    s.history_path = cfg.resolve(cfg.history);
    save_checkpoint(s.checkpoint_path, result.checkpoint);
    result.history.write_csv(s.history_path);
    s.best_epoch = result.best_epoch;
    s.best_val_loss = result.best_val_loss;
    s.epochs_run = static_cast<int>(result.history.rows.size());
    return s;
}

struct EvalBundle {
    ClassReport cls;
    RegReport reg;
    AgeBinReport bins;
    ConfidenceCurve curve;
    int64_t images = 0;
};

inline EvalBundle evaluate_indices(MultiTaskNet& net, const DataStore& store,
                                   const std::vector<int>& indices, const PixelStats& stats) {
    if (indices.empty()) throw EmptyInput("evaluation set is empty");
    std::vector<AgeGroup> pred_groups, true_groups;
    std::vector<double> pred_ages, true_ages_d;
    std::vector<int> true_ages;
    std::vector<MultiTaskOutput> outs;
    const AugmentPolicy none = AugmentPolicy::none();
    for (int idx : indices) {
        const Tensor x = sample_tensor(store, idx, false, none, 0, stats);
        const MultiTaskOutput o = net.infer(x);
        const auto& rec = store.samples[static_cast<size_t>(idx)].rec;
        pred_groups.push_back(o.predicted_group());
        true_groups.push_back(assign_age_group(rec.age));
        pred_ages.push_back(static_cast<double>(o.age_estimate));
        true_ages_d.push_back(static_cast<double>(rec.age));
        true_ages.push_back(rec.age);
        outs.push_back(o);
    }
    EvalBundle b;
    b.cls = classification_metrics(pred_groups, true_groups);
    b.reg = regression_metrics(pred_ages, true_ages_d);
    b.bins = age_bin_report(pred_ages, true_ages);
    b.curve = confidence_curve(outs, true_ages);
    b.images = static_cast<int64_t>(indices.size());
    return b;
}

inline nlohmann::json eval_bundle_json(const EvalBundle& b) {
    return {{"classification", class_report_json(b.cls)},
            {"regression", reg_report_json(b.reg)},
            {"age_bins", age_bin_report_json(b.bins)},
            {"confidence_curve", confidence_curve_json(b.curve)},
            {"images", b.images}};
}

namespace detail {

inline Modality meta_modality(const nlohmann::json& meta) {
    const std::string m = meta.value("modality", "");
    if (m == "eye") return Modality::Eye;
    if (m == "iris") return Modality::Iris;
    throw CorruptCheckpoint("checkpoint meta missing modality");
}

inline PixelStats meta_stats(const nlohmann::json& meta) {
    if (!meta.contains("stats_mean") || !meta.contains("stats_std"))
        throw CorruptCheckpoint("checkpoint meta missing dataset stats");
    return {meta.at("stats_mean").get<double>(), meta.at("stats_std").get<double>()};
}

inline std::set<std::string> meta_train_subjects(const nlohmann::json& meta) {
    if (!meta.contains("train_subjects"))
        throw CorruptCheckpoint("checkpoint meta missing train subjects");
    std::set<std::string> out;
    for (const auto& s : meta.at("train_subjects")) out.insert(s.get<std::string>());
    return out;
}

inline Sensor meta_train_sensor(const nlohmann::json& meta) {
    const std::string f = meta.value("sensor_filter", "both");
    if (f == "A") return Sensor::A;
    if (f == "B") return Sensor::B;
    throw EvalError("cross-sensor evaluation requires a checkpoint trained on a single sensor");
}

} // namespace detail

struct EvalSummary {
    bool cross_sensor = false;
    EvalBundle primary; // whole test set, or same-sensor subset
    EvalBundle other;   // populated only in cross-sensor mode
    CrossSensorDelta delta;
    std::string report_path;
};

/// Evaluates the checkpoint on the test split; refuses any subject overlap
/// with the training subjects recorded in the checkpoint. In cross-sensor
/// mode the test set is partitioned by capture sensor and paired reports
/// plus a delta summary are emitted.
inline EvalSummary cmd_eval(const RunConfig& cfg, bool cross_sensor) {
    CheckpointData ckpt = load_checkpoint(cfg.resolve(cfg.checkpoint));
    const Modality modality = detail::meta_modality(ckpt.meta);
    const PixelStats stats = detail::meta_stats(ckpt.meta);
    const auto train_subjects = detail::meta_train_subjects(ckpt.meta);

    const auto manifest = read_manifest(cfg.resolve(cfg.manifest));
    const auto excluded = read_exclusions(cfg.resolve(kExclusionsFile));
    const DataStore store = load_datastore(cfg, manifest, modality, excluded);
    const auto split = read_split(cfg.resolve(cfg.split_file));
    const SplitIndices idx = index_by_split(store, split, cfg.sensor_filter);
    if (idx.test.empty()) throw EmptyInput("test split has no samples");

    std::vector<SampleRecord> test_records;
    test_records.reserve(idx.test.size());
    for (int i : idx.test) test_records.push_back(store.samples[static_cast<size_t>(i)].rec);
    ensure_subject_disjoint(train_subjects, test_records);

    const std::string rdir = cfg.resolve(cfg.reports_dir);
    ensure_dir(rdir);
    const std::string modality_name = modality == Modality::Eye ? "eye" : "iris";

    EvalSummary s;
    if (!cross_sensor) {
        s.primary = evaluate_indices(ckpt.net, store, idx.test, stats);
        nlohmann::json j = eval_bundle_json(s.primary);
        j["schema_version"] = kReportSchemaVersion;
        j["kind"] = "eval";
        j["modality"] = modality_name;
        j["checkpoint_epoch"] = ckpt.epoch;
        s.report_path = rdir + "/eval.json";
        write_json_file(s.report_path, j);
        write_text_file(rdir + "/classification.csv", classification_csv(s.primary.cls));
        write_text_file(rdir + "/regression.csv", regression_csv(s.primary.reg));
        write_text_file(rdir + "/age_bins.csv", age_bins_csv(s.primary.bins));
        write_text_file(rdir + "/confidence_curve.csv", confidence_csv(s.primary.curve));
        write_text_file(rdir + "/confidence_curve.svg",
                        svg_line_chart("Mean softmax confidence by age", "true age (years)",
                                       "mean confidence",
                                       {confidence_series(modality_name, s.primary.curve)}));
        write_text_file(rdir + "/age_bin_mae.svg",
                        svg_line_chart("MAE by age bin", "age bin midpoint (years)", "MAE (years)",
                                       {age_bin_mae_series(modality_name, s.primary.bins)}));
    } else {
        const Sensor trained = detail::meta_train_sensor(ckpt.meta);
        std::vector<int> same_idx, other_idx;
        for (int i : idx.test)
            (store.samples[static_cast<size_t>(i)].rec.sensor == trained ? same_idx : other_idx)
                .push_back(i);
        if (same_idx.empty() || other_idx.empty())
            throw EvalError("cross-sensor evaluation needs test images from both sensors");
        s.cross_sensor = true;
        s.primary = evaluate_indices(ckpt.net, store, same_idx, stats);
        s.other = evaluate_indices(ckpt.net, store, other_idx, stats);
        s.delta = cross_sensor_delta(s.primary.cls, s.primary.reg, s.other.cls, s.other.reg);
        const std::string same_name = trained == Sensor::A ? "A" : "B";
        const std::string other_name = trained == Sensor::A ? "B" : "A";
        const nlohmann::json j = {{"schema_version", kReportSchemaVersion},
                                  {"kind", "cross_sensor"},
                                  {"modality", modality_name},
                                  {"checkpoint_epoch", ckpt.epoch},
                                  {"train_sensor", same_name},
                                  {"same_sensor", eval_bundle_json(s.primary)},
                                  {"other_sensor", eval_bundle_json(s.other)},
                                  {"delta", cross_sensor_delta_json(s.delta)}};
        s.report_path = rdir + "/cross_sensor.json";
        write_json_file(s.report_path, j);
        write_text_file(rdir + "/same_sensor_classification.csv",
                        classification_csv(s.primary.cls));
        write_text_file(rdir + "/same_sensor_regression.csv", regression_csv(s.primary.reg));
        write_text_file(rdir + "/same_sensor_age_bins.csv", age_bins_csv(s.primary.bins));
        write_text_file(rdir + "/same_sensor_confidence_curve.csv", confidence_csv(s.primary.curve));
        write_text_file(rdir + "/other_sensor_classification.csv", classification_csv(s.other.cls));
        write_text_file(rdir + "/other_sensor_regression.csv", regression_csv(s.other.reg));
        write_text_file(rdir + "/other_sensor_age_bins.csv", age_bins_csv(s.other.bins));
        write_text_file(rdir + "/other_sensor_confidence_curve.csv", confidence_csv(s.other.curve));
        {
            std::ostringstream d;
            d.precision(10);
            d << "metric,value\n";
            d << "accuracy_drop," << s.delta.accuracy_drop << '\n';
            d << "mae_increase," << s.delta.mae_increase << '\n';
            write_text_file(rdir + "/cross_sensor_delta.csv", d.str());
        }
        const std::string sn = "sensor " + same_name + " (train)";
        const std::string on = "sensor " + other_name;
        write_text_file(rdir + "/confidence_curve.svg",
                        svg_line_chart("Mean softmax confidence by age", "true age (years)",
                                       "mean confidence",
                                       {confidence_series(sn, s.primary.curve),
                                        confidence_series(on, s.other.curve)}));
        write_text_file(rdir + "/age_bin_mae.svg",
                        svg_line_chart("MAE by age bin", "age bin midpoint (years)", "MAE (years)",
                                       {age_bin_mae_series(sn, s.primary.bins),
                                        age_bin_mae_series(on, s.other.bins)}));
    }

    // one qualitative saliency map for the first test sample
    const int first = idx.test.front();
    const Tensor x0 = sample_tensor(store, first, false, AugmentPolicy::none(), 0, stats);
    const MultiTaskOutput o0 = ckpt.net.infer(x0);
    const GrayImage cam =
        saliency_map(ckpt.net, x0, o0.predicted_group() == AgeGroup::Young ? 0 : 1);
    write_gray_png(rdir + "/saliency_" + store.samples[static_cast<size_t>(first)].rec.id() +
                       ".png",
                   quantize_u8(cam));
    return s;
}

inline BenchReport cmd_bench(const RunConfig& cfg) {
    CheckpointData ckpt = load_checkpoint(cfg.resolve(cfg.checkpoint));
    const std::string model_id = "ocularnet-" + ckpt.meta.value("modality", "eye");
    BenchReport r = run_benchmark(ckpt.net, cfg.bench_iterations, cfg.bench_warmup, model_id);
    ensure_dir(cfg.resolve(cfg.reports_dir));
    write_json_file(cfg.resolve(cfg.reports_dir) + "/bench.json", bench_report_json(r));
    return r;
}

} // namespace ocularage
