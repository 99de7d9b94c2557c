#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "ocularage/errors.hpp"
#include "ocularage/manifest.hpp"
#include "ocularage/model.hpp"

namespace ocularage {

struct ClassReport {
    double accuracy = 0.0;
    std::array<double, 2> precision = {0.0, 0.0};
    std::array<double, 2> recall = {0.0, 0.0};
    std::array<double, 2> f1 = {0.0, 0.0};
    double macro_f1 = 0.0;
    std::array<std::array<int64_t, 2>, 2> confusion = {{{0, 0}, {0, 0}}}; // [truth][pred]
    int64_t n = 0;
};

struct RegReport {
    double mae = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double within_1yr = std::numeric_limits<double>::quiet_NaN();
    double within_2yr = std::numeric_limits<double>::quiet_NaN();
    int64_t n = 0;
};

inline constexpr std::array<const char*, 4> kAgeBinLabels = {"4-6", "7-9", "10-12", "13-16"};

inline int age_bin_index(int age) {
    if (age < kMinAge || age > kMaxAge) throw OutOfStudyRange("age outside 4..16: " + std::to_string(age));
    if (age <= 6) return 0;
    if (age <= 9) return 1;
    if (age <= 12) return 2;
    return 3;
}

struct AgeBinReport {
    std::array<RegReport, 4> bins;
};

struct ConfidenceCurve {
    // index 0 corresponds to age 4
    std::array<double, 13> mean_confidence;
    std::array<int64_t, 13> count = {};

    ConfidenceCurve() { mean_confidence.fill(std::numeric_limits<double>::quiet_NaN()); }
};

inline ClassReport classification_metrics(const std::vector<AgeGroup>& preds,
                                          const std::vector<AgeGroup>& truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw EmptyInput("classification_metrics: empty or mismatched inputs");
    ClassReport r;
    r.n = static_cast<int64_t>(preds.size());
    int64_t correct = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const int t = truths[i] == AgeGroup::Young ? 0 : 1;
        const int p = preds[i] == AgeGroup::Young ? 0 : 1;
        r.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)] += 1;
        if (t == p) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
    for (int c = 0; c < 2; ++c) {
        const auto tp = static_cast<double>(r.confusion[c][c]);
        const auto fp = static_cast<double>(r.confusion[1 - c][c]);
        const auto fn = static_cast<double>(r.confusion[c][1 - c]);
        r.precision[static_cast<size_t>(c)] = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
        r.recall[static_cast<size_t>(c)] = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
        const double pr = r.precision[static_cast<size_t>(c)] + r.recall[static_cast<size_t>(c)];
        r.f1[static_cast<size_t>(c)] =
            pr > 0 ? 2.0 * r.precision[static_cast<size_t>(c)] * r.recall[static_cast<size_t>(c)] / pr : 0.0;
    }
    r.macro_f1 = 0.5 * (r.f1[0] + r.f1[1]);
    return r;
}

inline RegReport regression_metrics(const std::vector<double>& preds,
                                    const std::vector<double>& truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw EmptyInput("regression_metrics: empty or mismatched inputs");
    RegReport r;
    r.n = static_cast<int64_t>(preds.size());
    double abs_sum = 0.0, sq_sum = 0.0;
    int64_t in1 = 0, in2 = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const double d = std::abs(preds[i] - truths[i]);
        abs_sum += d;
        sq_sum += d * d;
        if (d <= 1.0) ++in1;
        if (d <= 2.0) ++in2;
    }
    const double n = static_cast<double>(r.n);
    r.mae = abs_sum / n;
    r.rmse = std::sqrt(sq_sum / n);
    r.within_1yr = static_cast<double>(in1) / n;
    r.within_2yr = static_cast<double>(in2) / n;
    return r;
}

inline AgeBinReport age_bin_report(const std::vector<double>& preds,
                                   const std::vector<int>& true_ages) {
    if (preds.size() != true_ages.size())
        throw EmptyInput("age_bin_report: mismatched inputs");
    AgeBinReport out;
    std::array<std::vector<double>, 4> bp, bt;
    for (size_t i = 0; i < preds.size(); ++i) {
        const int b = age_bin_index(true_ages[i]);
        bp[static_cast<size_t>(b)].push_back(preds[i]);
        bt[static_cast<size_t>(b)].push_back(static_cast<double>(true_ages[i]));
    }
    for (int b = 0; b < 4; ++b) {
        if (bp[static_cast<size_t>(b)].empty()) continue; // n=0, metrics stay NaN (reported as null)
        out.bins[static_cast<size_t>(b)] =
            regression_metrics(bp[static_cast<size_t>(b)], bt[static_cast<size_t>(b)]);
    }
    return out;
}

inline ConfidenceCurve confidence_curve(const std::vector<MultiTaskOutput>& outputs,
                                        const std::vector<int>& true_ages) {
    if (outputs.size() != true_ages.size())
        throw EmptyInput("confidence_curve: mismatched inputs");
    ConfidenceCurve c;
    std::array<double, 13> sum = {};
    for (size_t i = 0; i < outputs.size(); ++i) {
        const int age = true_ages[i];
        if (age < kMinAge || age > kMaxAge)
            throw OutOfStudyRange("confidence_curve: age outside 4..16");
        sum[static_cast<size_t>(age - kMinAge)] += outputs[i].confidence;
        c.count[static_cast<size_t>(age - kMinAge)] += 1;
    }
    for (int i = 0; i < 13; ++i)
        if (c.count[static_cast<size_t>(i)] > 0)
            c.mean_confidence[static_cast<size_t>(i)] =
                sum[static_cast<size_t>(i)] / static_cast<double>(c.count[static_cast<size_t>(i)]);
    return c;
}

/// Guard used by every evaluation entry point: no test subject may belong to
/// the checkpoint's training subjects.
inline void ensure_subject_disjoint(const std::set<std::string>& train_subjects,
                                    const std::vector<SampleRecord>& test_records) {
    for (const auto& r : test_records)
        if (train_subjects.count(r.subject_id))
            throw SubjectLeakage("test subject appeared in training split: " + r.subject_id);
}

struct CrossSensorDelta {
    double accuracy_drop = 0.0; // same-sensor accuracy minus other-sensor accuracy
    double mae_increase = 0.0;  // other-sensor MAE minus same-sensor MAE
};

inline CrossSensorDelta cross_sensor_delta(const ClassReport& same_cls, const RegReport& same_reg,
                                           const ClassReport& other_cls,
                                           const RegReport& other_reg) {
    CrossSensorDelta d;
    d.accuracy_drop = same_cls.accuracy - other_cls.accuracy;
    d.mae_increase = other_reg.mae - same_reg.mae;
    return d;
}

} // namespace ocularage
