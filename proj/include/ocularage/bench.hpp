#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocularage/model.hpp"
#include "ocularage/rng.hpp"

namespace ocularage {

struct BenchVariant {
    std::string precision; // "fp32" or "fp16"
    int64_t size_bytes = 0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double cv = 0.0; // stddev / mean
};

struct BenchReport {
    std::string model_id;
    int64_t param_count = 0;
    int batch_size = 1; // sequential single-image inference
    int iterations = 0;
    int warmup = 0;
    BenchVariant fp32;
    BenchVariant fp16;
};

namespace detail {

struct LatencyStats {
    double mean = 0.0, median = 0.0, p95 = 0.0, cv = 0.0;
};

inline LatencyStats latency_stats(std::vector<double> ms) {
    LatencyStats s;
    if (ms.empty()) return s;
    std::sort(ms.begin(), ms.end());
    const size_t n = ms.size();
    double sum = 0.0;
    for (double v : ms) sum += v;
    s.mean = sum / static_cast<double>(n);
    s.median = n % 2 == 1 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
    const size_t k = static_cast<size_t>(
        std::max<int64_t>(0, static_cast<int64_t>(std::ceil(0.95 * static_cast<double>(n))) - 1));
    s.p95 = ms[std::min(k, n - 1)];
    double sq = 0.0;
    for (double v : ms) sq += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(sq / static_cast<double>(n));
    s.cv = s.mean > 0.0 ? sd / s.mean : 0.0;
    return s;
}

inline BenchVariant time_forward(MultiTaskNet& net, const Tensor& x, int iterations, int warmup,
                                 const char* precision, int64_t size_bytes) {
    using clock = std::chrono::steady_clock;
    volatile float sink = 0.0f;
    for (int i = 0; i < warmup; ++i) {
        const auto o = net.forward_eval(x);
        sink = sink + o.reg[0];
    }
    std::vector<double> ms;
    ms.reserve(static_cast<size_t>(iterations));
    for (int i = 0; i < iterations; ++i) {
        const auto t0 = clock::now();
        const auto o = net.forward_eval(x);
        const auto t1 = clock::now();
        sink = sink + o.reg[0];
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    const auto s = latency_stats(std::move(ms));
    BenchVariant v;
    v.precision = precision;
    v.size_bytes = size_bytes;
    v.mean_ms = s.mean;
    v.median_ms = s.median;
    v.p95_ms = s.p95;
    v.cv = s.cv;
    return v;
}

} // namespace detail

/// Sequential single-image forward-pass latency, preprocessing excluded.
/// Runs the FP32 model, then the same weights round-tripped through FP16.
inline BenchReport run_benchmark(MultiTaskNet net, int iterations = 1000, int warmup = 100,
                                 const std::string& model_id = "ocularnet") {
    if (iterations <= 0 || warmup < 0) throw ConfigError("bench: iterations must be positive");
    BenchReport r;
    r.model_id = model_id;
    r.param_count = net.param_count();
    r.iterations = iterations;
    r.warmup = warmup;

    Tensor x(net.input_shape);
    Rng rng(mix_seed(0xbe7cu));
    for (auto& v : x.data) v = static_cast<float>(rng.uniform());

    r.fp32 = detail::time_forward(net, x, iterations, warmup, "fp32", net.param_bytes_fp32());
    net.quantize_fp16();
    r.fp16 = detail::time_forward(net, x, iterations, warmup, "fp16", net.param_bytes_fp16());
    return r;
}

inline nlohmann::json bench_variant_json(const BenchVariant& v) {
    return {{"precision", v.precision}, {"size_bytes", v.size_bytes}, {"mean_ms", v.mean_ms},
            {"median_ms", v.median_ms}, {"p95_ms", v.p95_ms},         {"cv", v.cv}};
}

inline nlohmann::json bench_report_json(const BenchReport& r) {
    return {{"schema_version", 1},
            {"model_id", r.model_id},
            {"param_count", r.param_count},
            {"batch_size", r.batch_size},
            {"iterations", r.iterations},
            {"warmup", r.warmup},
            {"fp32", bench_variant_json(r.fp32)},
            {"fp16", bench_variant_json(r.fp16)}};
}

} // namespace ocularage
