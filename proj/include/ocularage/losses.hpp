#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ocularage/errors.hpp"
#include "ocularage/manifest.hpp"

namespace ocularage {

struct LossWeights {
    double alpha = 0.25;
    double ema_cls = 0.0;
    double ema_reg = 0.0;
    double ema_decay = 0.9;
    double target_ratio = 0.25;
    double clamp_lo = 0.01;
    double clamp_hi = 10.0;
};

/// EMA-ratio rule keeping the regression term's contribution proportional to
/// the classification term. Called once per epoch with the epoch-mean batch
/// losses.
inline void update_alpha(LossWeights& w, double batch_cls, double batch_reg) {
    if (batch_cls < 0.0 || batch_reg < 0.0) throw TrainError("update_alpha: losses must be >= 0");
    w.ema_cls = w.ema_decay * w.ema_cls + (1.0 - w.ema_decay) * batch_cls;
    w.ema_reg = w.ema_decay * w.ema_reg + (1.0 - w.ema_decay) * batch_reg;
    w.alpha = std::clamp(w.target_ratio * w.ema_cls / std::max(w.ema_reg, 1e-8), w.clamp_lo,
                         w.clamp_hi);
}

inline double total_loss(double cls, double reg, double alpha) { return cls + alpha * reg; }

inline std::array<double, 2> inverse_frequency_weights(const std::vector<AgeGroup>& labels) {
    int64_t n_young = 0, n_old = 0;
    for (AgeGroup g : labels) (g == AgeGroup::Young ? n_young : n_old) += 1;
    if (n_young == 0 || n_old == 0)
        throw MissingClass("inverse_frequency_weights: a class is absent from the training labels");
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * n_young), n / (2.0 * n_old)};
}

namespace detail {

constexpr double kProbClamp = 1e-7;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace detail

struct FocalResult {
    double loss = 0.0;
    std::array<double, 2> dlogits = {0.0, 0.0};
};

/// Per-class one-vs-all sigmoid focal loss with smoothed one-hot targets:
/// contribution_c = w_c * |t_c - p_c|^gamma * BCE(p_c, t_c), averaged over
/// the two classes. Returns the value and its gradient w.r.t. the logits.
inline FocalResult focal_loss(const std::array<double, 2>& logits, AgeGroup target, double gamma,
                              const std::array<double, 2>& class_weights, double eps_smooth) {
    if (gamma < 0.0) throw TrainError("focal_loss: gamma must be >= 0");
    FocalResult out;
    const int true_c = target == AgeGroup::Young ? 0 : 1;
    for (int c = 0; c < 2; ++c) {
        const double t = (c == true_c) ? 1.0 - eps_smooth : eps_smooth;
        const double p_raw = detail::sigmoid(logits[static_cast<size_t>(c)]);
        const double p = std::clamp(p_raw, detail::kProbClamp, 1.0 - detail::kProbClamp);
        const double bce = -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        const double diff = std::abs(t - p);
        const double focal = std::pow(diff, gamma);
        const double w = class_weights[static_cast<size_t>(c)];
        out.loss += 0.5 * w * focal * bce;

        double dldp = focal * (-t / p + (1.0 - t) / (1.0 - p));
        if (gamma > 0.0 && diff > 0.0)
            dldp += gamma * std::pow(diff, gamma - 1.0) * (p > t ? 1.0 : -1.0) * bce;
        out.dlogits[static_cast<size_t>(c)] = 0.5 * w * dldp * p * (1.0 - p);
    }
    return out;
}

struct MseResult {
    double loss = 0.0;
    std::vector<double> dpred;
};

inline MseResult mse_loss(const std::vector<double>& preds, const std::vector<double>& truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw EmptyBatch("mse_loss: empty or mismatched batch");
    MseResult out;
    out.dpred.resize(preds.size());
    const double n = static_cast<double>(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - truths[i];
        out.loss += d * d / n;
        out.dpred[i] = 2.0 * d / n;
    }
    return out;
}

inline double mse_value(double pred, double truth) {
    const double d = pred - truth;
    return d * d;
}

} // namespace ocularage
