#pragma once

#include <cmath>
#include <vector>

#include "ocularage/network.hpp"
#include "ocularage/tensor.hpp"

namespace ocularage {

/// Adam with decoupled weight decay: the decay multiplies parameters before
/// the bias-corrected Adam delta is applied, so decay never enters the
/// moment estimates.
template <typename T>
struct AdamT {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    int64_t t = 0;
    std::vector<TensorT<T>> m, v;

    void attach(const std::vector<ParamRef<T>>& params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p.value->shape);
            v.emplace_back(p.value->shape);
        }
        t = 0;
    }

    void step(const std::vector<ParamRef<T>>& params, double lr) {
        if (m.size() != params.size()) throw TrainError("Adam state not attached to these params");
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (size_t pi = 0; pi < params.size(); ++pi) {
            auto& p = *params[pi].value;
            auto& g = *params[pi].grad;
            auto& mi = m[pi];
            auto& vi = v[pi];
            for (size_t i = 0; i < p.data.size(); ++i) {
                const double gd = static_cast<double>(g.data[i]);
                const double mn = beta1 * static_cast<double>(mi.data[i]) + (1.0 - beta1) * gd;
                const double vn = beta2 * static_cast<double>(vi.data[i]) + (1.0 - beta2) * gd * gd;
                mi.data[i] = static_cast<T>(mn);
                vi.data[i] = static_cast<T>(vn);
                const double mhat = mn / bc1;
                const double vhat = vn / bc2;
                double x = static_cast<double>(p.data[i]);
                x *= 1.0 - lr * weight_decay;
                x -= lr * mhat / (std::sqrt(vhat) + eps);
                p.data[i] = static_cast<T>(x);
            }
        }
    }
};

using Adam = AdamT<float>;

/// Cosine annealing with warm restarts. advance() moves to the next epoch;
/// when a cycle completes, the next cycle is `mult` times longer.
struct CosineSchedule {
    double base_lr = 0.001;
    double min_lr = 1e-5;
    int t0 = 10;
    double mult = 2.0;
    int epoch_in_cycle = 0;
    int cycle_length = 10;

    CosineSchedule() = default;
    CosineSchedule(double base, double mn, int t0_, double mult_)
        : base_lr(base), min_lr(mn), t0(t0_), mult(mult_), cycle_length(t0_) {}

    double lr() const {
        constexpr double kPi = 3.14159265358979323846;
        return min_lr +
               0.5 * (base_lr - min_lr) * (1.0 + std::cos(kPi * epoch_in_cycle / cycle_length));
    }

    void advance() {
        ++epoch_in_cycle;
        if (epoch_in_cycle >= cycle_length) {
            epoch_in_cycle = 0;
            cycle_length = std::max(1, static_cast<int>(std::lround(cycle_length * mult)));
        }
    }
};

/// Stops after `patience` consecutive epochs without strict improvement.
struct EarlyStopper {
    int patience = 5;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int stale = 0;

    explicit EarlyStopper(int p = 5) : patience(p) {}

    /// Returns true when this epoch's value is a new best.
    bool observe(int epoch, double val_loss) {
        if (val_loss < best) {
            best = val_loss;
            best_epoch = epoch;
            stale = 0;
            return true;
        }
        ++stale;
        return false;
    }

    bool should_stop() const { return stale >= patience; }
};

} // namespace ocularage
