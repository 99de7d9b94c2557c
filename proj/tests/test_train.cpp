#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <limits>

#include "ocularage/train.hpp"

using namespace ocularage;

namespace {

// In-memory iris datastore: random strips, full masks, controlled ages.
DataStore make_store(const std::vector<std::pair<std::string, int>>& subject_ages,
                     int sessions, uint64_t seed) {
    Rng rng(seed);
    DataStore store;
    store.modality = Modality::Iris;
    for (const auto& [subject, age] : subject_ages) {
        for (int s = 0; s < sessions; ++s) {
            DataSample d;
            d.rec.subject_id = subject;
            d.rec.age = age;
            d.rec.sensor = Sensor::A;
            d.rec.modality = Modality::Iris;
            d.rec.image_path = "cache/" + subject + "_s" + std::to_string(s) + "_strip.png";
            for (auto& v : d.iris.strip) v = static_cast<float>(rng.uniform(0.0, 1.0));
            for (auto& m : d.iris.mask) m = 1;
            store.samples.push_back(std::move(d));
        }
    }
    return store;
}

SplitAssignment make_split(const std::vector<std::string>& train,
                           const std::vector<std::string>& val,
                           const std::vector<std::string>& test) {
    SplitAssignment s;
    s.train.insert(train.begin(), train.end());
    s.val.insert(val.begin(), val.end());
    s.test.insert(test.begin(), test.end());
    return s;
}

RunConfig quick_config(int epochs) {
    RunConfig cfg;
    cfg.train.modality = Modality::Iris;
    cfg.train.epochs = epochs;
    cfg.train.batch_size = 8;
    cfg.train.seed = 42;
    return cfg;
}

const std::vector<std::pair<std::string, int>> kSubjects = {
    {"S0001", 5}, {"S0002", 14}, {"S0003", 6}, {"S0004", 15}, {"S0005", 8}, {"S0006", 12}};

const std::vector<std::string> kTrain = {"S0001", "S0002", "S0003", "S0004"};

} // namespace

TEST_CASE("identical seeds give identical training runs") {
    const DataStore store = make_store(kSubjects, 3, 7);
    const SplitAssignment split = make_split(kTrain, {"S0005"}, {"S0006"});
    const RunConfig cfg = quick_config(3);

    const TrainResult a = train_model(cfg, store, split);
    const TrainResult b = train_model(cfg, store, split);

    REQUIRE(a.history.rows.size() == b.history.rows.size());
    for (size_t i = 0; i < a.history.rows.size(); ++i) {
        REQUIRE(a.history.rows[i].train_loss == b.history.rows[i].train_loss);
        REQUIRE(a.history.rows[i].val_loss == b.history.rows[i].val_loss);
        REQUIRE(a.history.rows[i].lr == b.history.rows[i].lr);
        REQUIRE(a.history.rows[i].alpha == b.history.rows[i].alpha);
    }
    MultiTaskNet net_a = a.checkpoint.net;
    MultiTaskNet net_b = b.checkpoint.net;
    auto pa = net_a.params();
    auto pb = net_b.params();
    for (size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i].value->data == pb[i].value->data);
    REQUIRE(a.checkpoint.meta == b.checkpoint.meta);
    REQUIRE(a.best_epoch == b.best_epoch);
}

TEST_CASE("training fills history, meta and the best checkpoint") {
    const DataStore store = make_store(kSubjects, 3, 8);
    const SplitAssignment split = make_split(kTrain, {"S0005"}, {"S0006"});
    const RunConfig cfg = quick_config(3);
    const TrainResult r = train_model(cfg, store, split);

    REQUIRE(r.history.rows.size() == 3);
    for (int e = 0; e < 3; ++e) {
        const EpochRow& row = r.history.rows[static_cast<size_t>(e)];
        REQUIRE(row.epoch == e + 1);
        REQUIRE(std::isfinite(row.train_loss));
        REQUIRE(std::isfinite(row.val_loss));
        REQUIRE(row.lr > 0.0);
        REQUIRE(row.alpha > 0.0);
    }
    REQUIRE(r.history.rows[0].alpha == 0.25); // alpha0 applies before the first rebalance
    REQUIRE(r.best_epoch >= 1);
    REQUIRE(r.best_epoch <= 3);
    REQUIRE(r.checkpoint.epoch == r.best_epoch);
    REQUIRE(std::isfinite(r.best_val_loss));

    const auto& meta = r.checkpoint.meta;
    REQUIRE(meta.at("modality") == "iris");
    REQUIRE(meta.at("stats_std").get<double>() > 0.0);
    REQUIRE(meta.at("sensor_filter") == "both");
    REQUIRE(meta.at("class_weight_young").get<double>() == 1.0); // balanced fixture
    const auto subjects = meta.at("train_subjects").get<std::vector<std::string>>();
    REQUIRE(subjects == kTrain); // set iteration: already sorted
    REQUIRE(!r.checkpoint.rng_state.empty());
    REQUIRE(r.checkpoint.adam.t > 0);
}

TEST_CASE("history csv has the exact header and one line per epoch") {
    const DataStore store = make_store(kSubjects, 2, 9);
    const SplitAssignment split = make_split(kTrain, {"S0005"}, {"S0006"});
    const TrainResult r = train_model(quick_config(2), store, split);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "oa_train_test";
    fs::create_directories(dir);
    const std::string path = (dir / "history.csv").string();
    r.history.write_csv(path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == "epoch,train_loss,val_loss,val_cls_loss,val_reg_loss,lr,alpha");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 2);
    fs::remove_all(dir);
}

TEST_CASE("early stopping ends the run patience epochs past the best") {
    // noise data overfits quickly, so validation loss turns upward early
    const DataStore store = make_store(kSubjects, 2, 10);
    const SplitAssignment split = make_split(kTrain, {"S0005"}, {"S0006"});
    RunConfig cfg = quick_config(40);
    cfg.train.lr = 0.02;
    cfg.train.patience = 3;
    const TrainResult r = train_model(cfg, store, split);

    const auto& rows = r.history.rows;
    REQUIRE(rows.size() < 40); // the stopper fired
    REQUIRE(rows.size() == static_cast<size_t>(r.best_epoch + 3));
    const double best = rows[r.best_epoch - 1].val_loss;
    for (const auto& row : rows)
        REQUIRE(row.val_loss >= best);
}

TEST_CASE("empty train or val splits are rejected") {
    const DataStore store = make_store(kSubjects, 2, 11);
    const RunConfig cfg = quick_config(2);
    CHECK_THROWS_AS(
        train_model(cfg, store, make_split({}, {"S0001", "S0002", "S0003", "S0004", "S0005"},
                                           {"S0006"})),
        EmptySplit);
    CHECK_THROWS_AS(
        train_model(cfg, store, make_split({"S0001", "S0002", "S0003", "S0004", "S0005"}, {},
                                           {"S0006"})),
        EmptySplit);
}

TEST_CASE("single-class training data is rejected") {
    const DataStore store = make_store({{"S0001", 5}, {"S0002", 6}, {"S0003", 7}, {"S0004", 12}},
                                       2, 12);
    const SplitAssignment split = make_split({"S0001", "S0002"}, {"S0003"}, {"S0004"});
    CHECK_THROWS_AS(train_model(quick_config(2), store, split), MissingClass);
}

TEST_CASE("constant pixels are rejected before training") {
    DataStore store = make_store(kSubjects, 1, 13);
    for (auto& s : store.samples)
        for (auto& v : s.iris.strip) v = 0.5f;
    const SplitAssignment split = make_split(kTrain, {"S0005"}, {"S0006"});
    CHECK_THROWS_AS(train_model(quick_config(2), store, split), ZeroStd);
}

TEST_CASE("non-finite data surfaces as a diverged loss") {
    DataStore store = make_store(kSubjects, 1, 14);
    store.samples[0].iris.strip[0] = std::numeric_limits<float>::quiet_NaN();
    const SplitAssignment split = make_split(kTrain, {"S0005"}, {"S0006"});
    CHECK_THROWS_AS(train_model(quick_config(2), store, split), DivergedLoss);
}

TEST_CASE("invalid hyperparameters fail validation up front") {
    const DataStore store = make_store(kSubjects, 1, 15);
    const SplitAssignment split = make_split(kTrain, {"S0005"}, {"S0006"});
    RunConfig cfg = quick_config(2);
    cfg.train.min_lr = cfg.train.lr * 10;
    CHECK_THROWS_AS(train_model(cfg, store, split), ConfigError);
    cfg = quick_config(0);
    CHECK_THROWS_AS(train_model(cfg, store, split), ConfigError);
}
