#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "ocularage/checkpoint.hpp"
#include "ocularage/config.hpp"
#include "ocularage/dataset.hpp"
#include "ocularage/losses.hpp"
#include "ocularage/model.hpp"
#include "ocularage/optim.hpp"

namespace ocularage {

struct EpochRow {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_cls_loss = 0.0;
    double val_reg_loss = 0.0;
    double lr = 0.0;
    double alpha = 0.0;
};

struct TrainHistory {
    std::vector<EpochRow> rows;

    void write_csv(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write history: " + path);
        out << "epoch,train_loss,val_loss,val_cls_loss,val_reg_loss,lr,alpha\n";
        out.precision(10);
        for (const auto& r : rows)
            out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_cls_loss
                << ',' << r.val_reg_loss << ',' << r.lr << ',' << r.alpha << "\n";
        if (!out.flush()) throw IoError("failed writing history: " + path);
    }
};

struct TrainResult {
    CheckpointData checkpoint;
    TrainHistory history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

namespace detail {

struct EvalLosses {
    double cls = 0.0;
    double reg = 0.0;
};

template <typename Net>
EvalLosses validation_losses(Net& net, const DataStore& store, const std::vector<int>& indices,
                             const AugmentPolicy& policy, const PixelStats& stats,
                             const std::array<double, 2>& class_weights, const TrainConfig& tc) {
    EvalLosses out;
    for (int idx : indices) {
        const Tensor x = sample_tensor(store, idx, false, policy, 0, stats);
        const auto o = net.forward_eval(x);
        const auto& rec = store.samples[static_cast<size_t>(idx)].rec;
        const auto fr = focal_loss({static_cast<double>(o.logits[0]), static_cast<double>(o.logits[1])},
                                   assign_age_group(rec.age), tc.focal_gamma, class_weights,
                                   tc.label_smoothing);
        out.cls += fr.loss;
        out.reg += mse_value(static_cast<double>(o.reg[0]), static_cast<double>(rec.age));
    }
    const double n = static_cast<double>(indices.size());
    out.cls /= n;
    out.reg /= n;
    return out;
}

} // namespace detail

/// Full training loop: seeded shuffling, per-sample augmentation, combined
/// focal + alpha*MSE objective, Adam with decoupled decay, cosine warm
/// restarts, per-epoch alpha rebalancing, early stopping on validation total
/// loss. Returns the best-validation checkpoint and the per-epoch history.
inline TrainResult train_model(const RunConfig& cfg, const DataStore& store,
                               const SplitAssignment& split) {
    const TrainConfig& tc = cfg.train;
    tc.validate();

    const SplitIndices idx = index_by_split(store, split, cfg.sensor_filter);
    if (idx.train.empty()) throw EmptySplit("training split has no samples");
    if (idx.val.empty()) throw EmptySplit("validation split has no samples");

    std::vector<AgeGroup> train_labels;
    train_labels.reserve(idx.train.size());
    for (int i : idx.train)
        train_labels.push_back(assign_age_group(store.samples[static_cast<size_t>(i)].rec.age));
    const std::array<double, 2> class_weights = inverse_frequency_weights(train_labels);

    const PixelStats stats = pick_stats(cfg, store, idx.train);
    if (stats.std <= 0.0) throw ZeroStd("training images have zero pixel variance");

    MultiTaskNet net = make_ocularnet<float>(tc.modality, tc.seed);
    auto params = net.params();
    Adam adam;
    adam.weight_decay = tc.weight_decay;
    adam.attach(params);
    CosineSchedule schedule(tc.lr, tc.min_lr, tc.t0, tc.cycle_mult);
    EarlyStopper stopper(tc.patience);
    LossWeights lw;
    lw.alpha = tc.alpha0;

    Rng shuffle_rng(mix_seed(tc.seed, 0x5f1eu));
    std::vector<int> order = idx.train;

    TrainResult result;
    CheckpointData best;
    bool have_best = false;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        const double lr = schedule.lr();
        const double alpha = lw.alpha;
        shuffle_rng.shuffle(order.begin(), order.end());

        double epoch_cls = 0.0, epoch_reg = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(tc.batch_size));
            const double bsz = static_cast<double>(stop - start);
            net.zero_grad();
            double batch_cls = 0.0, batch_reg = 0.0;
            for (size_t bi = start; bi < stop; ++bi) {
                const int si = order[bi];
                const auto& rec = store.samples[static_cast<size_t>(si)].rec;
                const uint64_t aug_seed =
                    mix_seed(tc.seed, static_cast<uint64_t>(epoch), static_cast<uint64_t>(si));
                const Tensor x = sample_tensor(store, si, true, cfg.augment, aug_seed, stats);
                auto o = net.forward(x, true, true);
                const auto fr =
                    focal_loss({static_cast<double>(o.logits[0]), static_cast<double>(o.logits[1])},
                               assign_age_group(rec.age), tc.focal_gamma, class_weights,
                               tc.label_smoothing);
                const double pred = static_cast<double>(o.reg[0]);
                const double sq = mse_value(pred, static_cast<double>(rec.age));
                batch_cls += fr.loss;
                batch_reg += sq;

                Tensor glog({2});
                glog[0] = static_cast<float>(fr.dlogits[0] / bsz);
                glog[1] = static_cast<float>(fr.dlogits[1] / bsz);
                Tensor greg({1});
                greg[0] = static_cast<float>(alpha * 2.0 * (pred - rec.age) / bsz);
                net.backward(glog, greg);
            }
            const double batch_total = total_loss(batch_cls / bsz, batch_reg / bsz, alpha);
            if (!std::isfinite(batch_total))
                throw DivergedLoss("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch starting at sample " + std::to_string(start));
            adam.step(params, lr);
            epoch_cls += batch_cls;
            epoch_reg += batch_reg;
            seen += stop - start;
        }
        epoch_cls /= static_cast<double>(seen);
        epoch_reg /= static_cast<double>(seen);
        const double train_total = total_loss(epoch_cls, epoch_reg, alpha);

        const auto val =
            detail::validation_losses(net, store, idx.val, cfg.augment, stats, class_weights, tc);
        const double val_total = total_loss(val.cls, val.reg, alpha);
        if (!std::isfinite(val_total))
            throw DivergedLoss("non-finite validation loss at epoch " + std::to_string(epoch));

        result.history.rows.push_back(
            {epoch, train_total, val_total, val.cls, val.reg, lr, alpha});

        if (stopper.observe(epoch, val_total)) {
            best.net = net;
            best.adam = adam;
            best.epoch = epoch;
            best.rng_state = shuffle_rng.state();
            have_best = true;
        }
        update_alpha(lw, epoch_cls, epoch_reg);
        schedule.advance();
        if (stopper.should_stop()) break;
    }

    if (!have_best) throw TrainError("no finite validation epoch recorded");
    best.meta = {{"modality", tc.modality == Modality::Eye ? "eye" : "iris"},
                 {"stats_mean", stats.mean},
                 {"stats_std", stats.std},
                 {"alpha", lw.alpha},
                 {"ema_cls", lw.ema_cls},
                 {"ema_reg", lw.ema_reg},
                 {"class_weight_young", class_weights[0]},
                 {"class_weight_old", class_weights[1]},
                 {"focal_gamma", tc.focal_gamma},
                 {"label_smoothing", tc.label_smoothing},
                 {"seed", tc.seed},
                 {"sensor_filter",
                  cfg.sensor_filter == SensorFilter::Both
                      ? "both"
                      : (cfg.sensor_filter == SensorFilter::OnlyA ? "A" : "B")}};
    {
        nlohmann::json subjects = nlohmann::json::array();
        for (const auto& s : split.train) subjects.push_back(s);
        best.meta["train_subjects"] = subjects;
    }
    result.best_epoch = stopper.best_epoch;
    result.best_val_loss = stopper.best;
    result.checkpoint = std::move(best);
    return result;
}

} // namespace ocularage
