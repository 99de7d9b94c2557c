// ocularage: synthesize, preprocess, split, train, evaluate and benchmark
// the ocular age-estimation pipeline from a single TOML config.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "ocularage/pipeline.hpp"

namespace {

using namespace ocularage;

RunConfig load_config(const std::string& path, const std::string& checkpoint_override,
                      const std::string& modality_override) {
    RunConfig cfg = load_run_config(path);
    apply_env_overrides(cfg);
    if (!checkpoint_override.empty()) cfg.checkpoint = checkpoint_override;
    if (!modality_override.empty()) {
        if (modality_override == "eye") cfg.train.modality = Modality::Eye;
        else if (modality_override == "iris") cfg.train.modality = Modality::Iris;
        else throw ConfigError("--modality must be 'eye' or 'iris'");
    }
    cfg.validate();
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"ocular age estimation pipeline"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_override, modality_override;
    bool cross_sensor = false;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "TOML run config")->required();
    };

    auto* synth = app.add_subcommand("synth", "render the synthetic dataset and manifest");
    add_config(synth);
    auto* preprocess =
        app.add_subcommand("preprocess", "segment and normalize every manifest image");
    add_config(preprocess);
    auto* split = app.add_subcommand("split", "write the subject-exclusive train/val/test split");
    add_config(split);
    auto* train = app.add_subcommand("train", "train the multi-task model");
    add_config(train);
    train->add_option("--checkpoint", checkpoint_override, "checkpoint output path");
    train->add_option("--modality", modality_override, "eye or iris")
        ->check(CLI::IsMember({"eye", "iris"}));
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_config(eval);
    eval->add_option("--checkpoint", checkpoint_override, "checkpoint to evaluate");
    eval->add_flag("--cross-sensor", cross_sensor, "paired same/other sensor reports");
    auto* bench = app.add_subcommand("bench", "measure single-image inference latency");
    add_config(bench);
    bench->add_option("--checkpoint", checkpoint_override, "checkpoint to benchmark");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const RunConfig cfg = load_config(config_path, checkpoint_override, modality_override);

    if (synth->parsed()) {
        const SynthSummary s = cmd_synth(cfg);
        std::printf("synth: wrote %d images and %s\n", s.images, s.manifest_path.c_str());
    } else if (preprocess->parsed()) {
        const PreprocessSummary s = cmd_preprocess(cfg);
        std::printf("preprocess: cached %d strips, excluded %d (%s)\n", s.processed, s.excluded,
                    s.exclusions_path.c_str());
    } else if (split->parsed()) {
        const SplitSummary s = cmd_split(cfg);
        std::printf("split: %d/%d/%d train/val/test subjects -> %s\n", s.train_subjects,
                    s.val_subjects, s.test_subjects, s.split_path.c_str());
    } else if (train->parsed()) {
        const TrainSummary s = cmd_train(cfg);
        std::printf("train: best epoch %d (val loss %.6f) after %d epochs -> %s\n", s.best_epoch,
                    s.best_val_loss, s.epochs_run, s.checkpoint_path.c_str());
    } else if (eval->parsed()) {
        const EvalSummary s = cmd_eval(cfg, cross_sensor);
        if (s.cross_sensor)
            std::printf("eval: same-sensor accuracy %.4f MAE %.4f | other-sensor accuracy %.4f "
                        "MAE %.4f | drop %.4f, MAE +%.4f -> %s\n",
                        s.primary.cls.accuracy, s.primary.reg.mae, s.other.cls.accuracy,
                        s.other.reg.mae, s.delta.accuracy_drop, s.delta.mae_increase,
                        s.report_path.c_str());
        else
            std::printf("eval: accuracy %.4f, macro F1 %.4f, MAE %.4f -> %s\n",
                        s.primary.cls.accuracy, s.primary.cls.macro_f1, s.primary.reg.mae,
                        s.report_path.c_str());
    } else if (bench->parsed()) {
        const BenchReport r = cmd_bench(cfg);
        std::printf("bench: %s, %lld params, fp32 mean %.3f ms / fp16 mean %.3f ms over %d "
                    "iterations\n",
                    r.model_id.c_str(), static_cast<long long>(r.param_count), r.fp32.mean_ms,
                    r.fp16.mean_ms, r.iterations);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ocularage::ConfigError& e) {
        std::fprintf(stderr, "error[config]: %s\n", e.what());
        return 2;
    } catch (const ocularage::DataError& e) {
        std::fprintf(stderr, "error[data]: %s\n", e.what());
        return 3;
    } catch (const ocularage::TrainError& e) {
        std::fprintf(stderr, "error[train]: %s\n", e.what());
        return 4;
    } catch (const ocularage::EvalError& e) {
        std::fprintf(stderr, "error[eval]: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error[internal]: %s\n", e.what());
        return 1;
    }
}
