#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ocularage/fp16.hpp"
#include "ocularage/manifest.hpp"
#include "ocularage/network.hpp"

namespace ocularage {

struct MultiTaskOutput {
    float class_logits[2] = {0.0f, 0.0f};
    float age_estimate = 0.0f;
    float confidence = 0.5f; // max softmax over the two logits

    AgeGroup predicted_group() const {
        return class_logits[1] > class_logits[0] ? AgeGroup::Old : AgeGroup::Young;
    }
};

inline float softmax_confidence(float l0, float l1) {
    const float m = std::max(l0, l1);
    const float e0 = std::exp(l0 - m);
    const float e1 = std::exp(l1 - m);
    return std::max(e0, e1) / (e0 + e1);
}

/// Shared backbone with a classification head (2 logits) and a regression
/// head (1 scalar). Single-sample semantics throughout.
template <typename T>
struct MultiTaskNetT {
    std::vector<int> input_shape; // CHW
    SequentialT<T> backbone;
    SequentialT<T> head_cls;
    SequentialT<T> head_reg;

    struct Output {
        TensorT<T> logits; // shape {2}
        TensorT<T> reg;    // shape {1}
    };

    Output forward(const TensorT<T>& x, bool training, bool record) {
        require_shape(x, input_shape, "MultiTaskNet");
        TensorT<T> f = backbone.forward(x, training, record);
        Output out;
        out.logits = head_cls.forward(f, training, record);
        out.reg = head_reg.forward(f, training, record);
        return out;
    }

    Output forward_eval(const TensorT<T>& x) {
        require_shape(x, input_shape, "MultiTaskNet");
        TensorT<T> f = backbone.forward_eval(x);
        Output out;
        out.logits = head_cls.forward_eval(f);
        out.reg = head_reg.forward_eval(f);
        return out;
    }

    MultiTaskOutput infer(const TensorT<T>& x) {
        const Output o = forward_eval(x);
        MultiTaskOutput r;
        r.class_logits[0] = static_cast<float>(o.logits[0]);
        r.class_logits[1] = static_cast<float>(o.logits[1]);
        r.age_estimate = static_cast<float>(o.reg[0]);
        r.confidence = softmax_confidence(r.class_logits[0], r.class_logits[1]);
        return r;
    }

    /// Backward from both heads; caches must come from a record=true forward.
    TensorT<T> backward(const TensorT<T>& glogits, const TensorT<T>& greg) {
        TensorT<T> gf = head_cls.backward(glogits);
        const TensorT<T> gf2 = head_reg.backward(greg);
        if (!gf.same_shape(gf2)) throw ShapeMismatch("head gradients disagree on feature shape");
        for (size_t i = 0; i < gf.data.size(); ++i) gf.data[i] += gf2.data[i];
        return backbone.backward(gf);
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        backbone.collect_params("backbone", out);
        head_cls.collect_params("head_cls", out);
        head_reg.collect_params("head_reg", out);
        return out;
    }

    std::vector<ParamRef<T>> buffers() {
        std::vector<ParamRef<T>> out;
        backbone.collect_buffers("backbone", out);
        head_cls.collect_buffers("head_cls", out);
        head_reg.collect_buffers("head_reg", out);
        return out;
    }

    void zero_grad() {
        backbone.zero_grad();
        head_cls.zero_grad();
        head_reg.zero_grad();
    }

    int64_t param_count() {
        int64_t n = 0;
        for (const auto& p : params()) n += p.value->numel();
        return n;
    }

    int64_t param_bytes_fp32() { return param_count() * 4; }
    int64_t param_bytes_fp16() { return param_count() * 2; }

    void quantize_fp16() {
        for (auto& p : params()) quantize_fp16_inplace(*p.value);
    }

    template <typename U>
    MultiTaskNetT<U> cast() const {
        MultiTaskNetT<U> out;
        out.input_shape = input_shape;
        auto conv_seq = [](const SequentialT<T>& src, SequentialT<U>& dst) {
            dst = sequential_from_spec<U>(sequential_spec<T>(src));
        };
        conv_seq(backbone, out.backbone);
        conv_seq(head_cls, out.head_cls);
        conv_seq(head_reg, out.head_reg);
        auto* self = const_cast<MultiTaskNetT<T>*>(this);
        auto src_p = self->params();
        auto dst_p = out.params();
        for (size_t i = 0; i < src_p.size(); ++i) *dst_p[i].value = src_p[i].value->template cast<U>();
        auto src_b = self->buffers();
        auto dst_b = out.buffers();
        for (size_t i = 0; i < src_b.size(); ++i) *dst_b[i].value = src_b[i].value->template cast<U>();
        return out;
    }
};

using MultiTaskNet = MultiTaskNetT<float>;

namespace detail {

template <typename T>
void push_separable_block(SequentialT<T>& s, int in_c, int out_c, int stride) {
    s.layers.push_back(DepthwiseConv2DT<T>(in_c, 3, stride, 1));
    s.layers.push_back(BatchNormT<T>(in_c));
    s.layers.push_back(HardSwishT<T>{});
    s.layers.push_back(Conv2DT<T>(in_c, out_c, 1, 1, 0));
    s.layers.push_back(BatchNormT<T>(out_c));
    s.layers.push_back(HardSwishT<T>{});
}

} // namespace detail

/// Compact depthwise-separable backbone in the MobileNetV3 spirit, sized for
/// CPU-only training. Eye input is 1x240x320, iris input 2x32x256.
template <typename T>
inline MultiTaskNetT<T> make_ocularnet(Modality modality, uint64_t seed) {
    MultiTaskNetT<T> net;
    const int in_c = modality == Modality::Eye ? 1 : 2;
    net.input_shape = modality == Modality::Eye ? std::vector<int>{1, 240, 320}
                                                : std::vector<int>{2, 32, 256};
    auto& b = net.backbone;
    b.layers.push_back(Conv2DT<T>(in_c, 8, 3, 2, 1));
    b.layers.push_back(BatchNormT<T>(8));
    b.layers.push_back(HardSwishT<T>{});
    detail::push_separable_block(b, 8, 16, 2);
    detail::push_separable_block(b, 16, 32, 2);
    detail::push_separable_block(b, 32, 64, 2);
    detail::push_separable_block(b, 64, 96, 2);
    detail::push_separable_block(b, 96, 128, 1);
    b.layers.push_back(GlobalAvgPoolT<T>{});
    b.layers.push_back(DenseT<T>(128, 64));
    b.layers.push_back(HardSwishT<T>{});

    net.head_cls.layers.push_back(DenseT<T>(64, 2));
    net.head_reg.layers.push_back(DenseT<T>(64, 1));

    Rng rng(mix_seed(seed, 0x0c11u));
    b.init(rng);
    net.head_cls.init(rng);
    net.head_reg.init(rng);
    // start the regression head at the age-range midpoint so early epochs
    // aren't spent crawling out of zero
    auto& reg_dense = std::get<DenseT<T>>(net.head_reg.layers.back());
    reg_dense.b[0] = T(10);
    return net;
}

template <typename T>
inline nlohmann::json net_topology(const MultiTaskNetT<T>& net) {
    return {{"input_shape", net.input_shape},
            {"backbone", sequential_spec<T>(net.backbone)},
            {"head_cls", sequential_spec<T>(net.head_cls)},
            {"head_reg", sequential_spec<T>(net.head_reg)}};
}

template <typename T>
inline MultiTaskNetT<T> net_from_topology(const nlohmann::json& j) {
    MultiTaskNetT<T> net;
    net.input_shape = j.at("input_shape").get<std::vector<int>>();
    net.backbone = sequential_from_spec<T>(j.at("backbone"));
    net.head_cls = sequential_from_spec<T>(j.at("head_cls"));
    net.head_reg = sequential_from_spec<T>(j.at("head_reg"));
    return net;
}

} // namespace ocularage
