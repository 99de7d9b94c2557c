#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ocularage/pipeline.hpp"

using namespace ocularage;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int csv_data_rows(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line); // header
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line != "\r") ++rows;
    return rows;
}

/// Desk-scale run: 10 subjects x 2 sessions x 2 eyes, iris model, 2 epochs.
RunConfig small_config(const fs::path& ws) {
    RunConfig cfg;
    cfg.workspace = ws.string();
    cfg.synth.subject_count = 10;
    cfg.synth.sessions_per_subject = 2;
    cfg.synth.width = 320;
    cfg.synth.height = 240;
    cfg.synth.seed = 77;
    cfg.train.modality = Modality::Iris;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    cfg.train.seed = 7;
    cfg.sensor_filter = SensorFilter::OnlyA; // enables the cross-sensor report
    cfg.bench_iterations = 6;
    cfg.bench_warmup = 2;
    return cfg;
}

} // namespace

TEST_CASE("the pipeline runs synth through bench in a scratch workspace") {
    const fs::path ws = fs::temp_directory_path() / "oa_pipeline_test";
    fs::remove_all(ws);
    const RunConfig cfg = small_config(ws);

    // synth: every subject-session yields two eyes, reruns are bit-identical
    const SynthSummary sy = cmd_synth(cfg);
    REQUIRE(sy.images == 10 * 2 * 2);
    const auto manifest = read_manifest(sy.manifest_path);
    REQUIRE(manifest.size() == 40);
    validate_manifest_paths(manifest, cfg.workspace);
    bool saw_a = false, saw_b = false;
    for (const auto& rec : manifest) {
        REQUIRE(rec.modality == Modality::Eye);
        (rec.sensor == Sensor::A ? saw_a : saw_b) = true;
    }
    REQUIRE(saw_a);
    REQUIRE(saw_b);
    const std::string manifest_bytes = slurp(sy.manifest_path);
    const fs::path probe_png = fs::path(cfg.resolve(manifest[5].image_path));
    const std::string probe_bytes = slurp(probe_png);
    cmd_synth(cfg);
    REQUIRE(slurp(sy.manifest_path) == manifest_bytes);
    REQUIRE(slurp(probe_png) == probe_bytes);

    // a featureless frame must be excluded, not fatal
    const std::string blanked_id = manifest.front().id();
    write_gray_png(cfg.resolve(manifest.front().image_path),
                   GrayImage(cfg.synth.width, cfg.synth.height, 0.5f));

    const PreprocessSummary pp = cmd_preprocess(cfg);
    REQUIRE(pp.processed + pp.excluded == 40);
    REQUIRE(pp.excluded >= 1);
    REQUIRE(pp.excluded <= 4); // the renderer should segment cleanly
    const auto excluded = read_exclusions(pp.exclusions_path);
    REQUIRE(excluded.count(blanked_id) == 1);
    for (const auto& rec : manifest) {
        if (!excluded.count(rec.id())) {
            const NormalizedIris n = read_normalized_cached(cfg.resolve(cfg.cache_dir), rec.id());
            REQUIRE(n.strip.size() == static_cast<size_t>(kAngularBins) * kRadialBins);
            break;
        }
    }
    const PreprocessSummary again = cmd_preprocess(cfg);
    REQUIRE(again.processed == pp.processed);
    REQUIRE(again.excluded == pp.excluded);

    // split: subject-exclusive 8/1/1 at this scale
    const SplitSummary sp = cmd_split(cfg);
    REQUIRE(sp.train_subjects == 8);
    REQUIRE(sp.val_subjects == 1);
    REQUIRE(sp.test_subjects == 1);
    const SplitAssignment split = read_split(sp.split_path);
    REQUIRE(split.train.size() == 8);

    // train: artifacts land where the config points
    const TrainSummary tr = cmd_train(cfg);
    REQUIRE(fs::exists(tr.checkpoint_path));
    REQUIRE(fs::exists(tr.history_path));
    REQUIRE(tr.best_epoch >= 1);
    REQUIRE(tr.best_epoch <= 2);
    REQUIRE(tr.epochs_run == csv_data_rows(tr.history_path));
    REQUIRE(std::isfinite(tr.best_val_loss));
    {
        const CheckpointData ckpt = load_checkpoint(tr.checkpoint_path);
        REQUIRE(ckpt.meta.at("modality").get<std::string>() == "iris");
        REQUIRE(ckpt.meta.at("sensor_filter").get<std::string>() == "A");
        REQUIRE(ckpt.epoch == tr.best_epoch);
    }

    // eval: schema-versioned JSON plus the CSV/SVG companions
    const EvalSummary ev = cmd_eval(cfg, false);
    REQUIRE_FALSE(ev.cross_sensor);
    const auto j = nlohmann::json::parse(slurp(ev.report_path));
    REQUIRE(j.at("schema_version").get<int>() == 1);
    REQUIRE(j.at("kind").get<std::string>() == "eval");
    REQUIRE(j.at("modality").get<std::string>() == "iris");
    REQUIRE(j.at("checkpoint_epoch").get<int>() == tr.best_epoch);
    REQUIRE(j.at("images").get<int>() >= 1);
    const double acc = j.at("classification").at("accuracy").get<double>();
    REQUIRE(acc >= 0.0);
    REQUIRE(acc <= 1.0);
    REQUIRE(j.at("regression").at("mae").get<double>() >= 0.0);
    const fs::path rdir = fs::path(cfg.resolve(cfg.reports_dir));
    for (const char* name : {"classification.csv", "regression.csv", "age_bins.csv",
                             "confidence_curve.csv", "confidence_curve.svg", "age_bin_mae.svg"})
        REQUIRE(fs::exists(rdir / name));
    bool saw_saliency = false;
    for (const auto& entry : fs::directory_iterator(rdir))
        if (entry.path().filename().string().rfind("saliency_", 0) == 0) saw_saliency = true;
    REQUIRE(saw_saliency);

    // cross-sensor: paired reports and the degradation delta
    const EvalSummary cs = cmd_eval(cfg, true);
    REQUIRE(cs.cross_sensor);
    const auto cj = nlohmann::json::parse(slurp(cs.report_path));
    REQUIRE(cj.at("kind").get<std::string>() == "cross_sensor");
    REQUIRE(cj.at("train_sensor").get<std::string>() == "A");
    REQUIRE(cj.at("same_sensor").at("images").get<int>() >= 1);
    REQUIRE(cj.at("other_sensor").at("images").get<int>() >= 1);
    const double drop = cj.at("delta").at("accuracy_drop").get<double>();
    REQUIRE(drop == Catch::Approx(cs.primary.cls.accuracy - cs.other.cls.accuracy).margin(1e-12));
    REQUIRE(cs.delta.mae_increase ==
            Catch::Approx(cs.other.reg.mae - cs.primary.reg.mae).margin(1e-12));
    for (const char* name :
         {"cross_sensor_delta.csv", "same_sensor_classification.csv",
          "other_sensor_classification.csv", "same_sensor_regression.csv",
          "other_sensor_regression.csv"})
        REQUIRE(fs::exists(rdir / name));

    // bench: latency and size report on the trained checkpoint
    const BenchReport br = cmd_bench(cfg);
    REQUIRE(br.iterations == 6);
    REQUIRE(br.warmup == 2);
    REQUIRE(br.fp16.size_bytes * 2 == br.fp32.size_bytes);
    REQUIRE(br.fp32.median_ms > 0.0);
    REQUIRE(br.fp32.p95_ms >= br.fp32.median_ms);
    REQUIRE(br.fp16.p95_ms >= br.fp16.median_ms);
    REQUIRE(fs::exists(rdir / "bench.json"));

    // a truncated checkpoint is rejected up front
    const std::string ckpt_bytes = slurp(tr.checkpoint_path);
    {
        std::ofstream out(tr.checkpoint_path, std::ios::binary | std::ios::trunc);
        out.write(ckpt_bytes.data(), static_cast<std::streamsize>(ckpt_bytes.size() / 2));
    }
    CHECK_THROWS_AS(cmd_eval(cfg, false), CorruptCheckpoint);

    // a checkpoint claiming a test subject was trained on must be refused
    {
        std::ofstream out(tr.checkpoint_path, std::ios::binary | std::ios::trunc);
        out.write(ckpt_bytes.data(), static_cast<std::streamsize>(ckpt_bytes.size()));
    }
    CheckpointData tampered = load_checkpoint(tr.checkpoint_path);
    tampered.meta["train_subjects"].push_back(*split.test.begin());
    save_checkpoint(tr.checkpoint_path, tampered);
    CHECK_THROWS_AS(cmd_eval(cfg, false), SubjectLeakage);

    fs::remove_all(ws);
}

TEST_CASE("eval requires the artifacts it consumes") {
    const fs::path ws = fs::temp_directory_path() / "oa_pipeline_missing";
    fs::remove_all(ws);
    fs::create_directories(ws);
    RunConfig cfg;
    cfg.workspace = ws.string();
    CHECK_THROWS_AS(cmd_eval(cfg, false), IoError);   // no checkpoint
    CHECK_THROWS_AS(cmd_preprocess(cfg), IoError);    // no manifest
    CHECK_THROWS_AS(cmd_bench(cfg), IoError);         // no checkpoint
    fs::remove_all(ws);
}
