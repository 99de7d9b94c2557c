#pragma once

#include <vector>

#include "ocularage/errors.hpp"
#include "ocularage/image.hpp"
#include "ocularage/model.hpp"

namespace ocularage {

namespace detail {

// Inference-mode single-layer forward.
template <typename T>
TensorT<T> eval_forward_one(LayerT<T>& layer, const TensorT<T>& x) {
    return std::visit(
        [&](auto& l) -> TensorT<T> {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BatchNormT<T>>) return l.forward(x, false);
            else return l.forward(x);
        },
        layer);
}

// Inference-mode input gradient. BatchNorm differs from training mode: with
// frozen running statistics it is a per-channel affine map.
template <typename T>
TensorT<T> eval_backward_one(LayerT<T>& layer, const TensorT<T>& x, const TensorT<T>& g) {
    return std::visit(
        [&](auto& l) -> TensorT<T> {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BatchNormT<T>>) {
                TensorT<T> gin = g;
                const int n = x.shape[1] * x.shape[2];
                for (int c = 0; c < l.channels; ++c) {
                    const T scale = l.gamma[static_cast<size_t>(c)] /
                                    std::sqrt(l.running_var[static_cast<size_t>(c)] + l.eps);
                    T* gi = &gin.data[static_cast<size_t>(c) * n];
                    for (int i = 0; i < n; ++i) gi[i] *= scale;
                }
                return gin;
            } else {
                return l.backward(x, g);
            }
        },
        layer);
}

} // namespace detail

/// Grad-CAM on the classification head: channel weights are the spatial mean
/// of d(logit_target)/d(last conv feature map); the heatmap is the ReLU of
/// the weighted channel sum, upsampled to input size and min-max normalized
/// (all-zero maps stay zero). Parameter gradients touched along the way are
/// cleared before returning.
template <typename T>
inline GrayImage saliency_map(MultiTaskNetT<T>& net, const TensorT<T>& input, int target_class) {
    if (target_class < 0 || target_class > 1)
        throw EvalError("saliency_map: target_class must be 0 or 1");
    require_shape(input, net.input_shape, "saliency_map");

    int conv_idx = -1;
    for (size_t i = 0; i < net.backbone.layers.size(); ++i) {
        if (std::holds_alternative<Conv2DT<T>>(net.backbone.layers[i]) ||
            std::holds_alternative<DepthwiseConv2DT<T>>(net.backbone.layers[i]))
            conv_idx = static_cast<int>(i);
    }
    if (conv_idx < 0) throw NoConvLayer("saliency_map: network has no convolutional layer");

    // forward through the backbone, keeping every layer input
    std::vector<TensorT<T>> acts;
    acts.reserve(net.backbone.layers.size() + 1);
    acts.push_back(input);
    for (auto& layer : net.backbone.layers)
        acts.push_back(detail::eval_forward_one(layer, acts.back()));

    std::vector<TensorT<T>> cls_acts;
    cls_acts.push_back(acts.back());
    for (auto& layer : net.head_cls.layers)
        cls_acts.push_back(detail::eval_forward_one(layer, cls_acts.back()));

    TensorT<T> g(cls_acts.back().shape);
    g[static_cast<size_t>(target_class)] = T(1);
    for (size_t i = net.head_cls.layers.size(); i-- > 0;)
        g = detail::eval_backward_one(net.head_cls.layers[i], cls_acts[i], g);
    for (size_t i = net.backbone.layers.size(); i-- > static_cast<size_t>(conv_idx) + 1;)
        g = detail::eval_backward_one(net.backbone.layers[i], acts[i], g);
    net.zero_grad();

    const TensorT<T>& feature = acts[static_cast<size_t>(conv_idx) + 1];
    if (!g.same_shape(feature)) throw ShapeMismatch("saliency_map: gradient/feature mismatch");

    const int ch = feature.shape[0], fh = feature.shape[1], fw = feature.shape[2];
    const int n = fh * fw;
    GrayImage cam(fw, fh, 0.0f);
    for (int c = 0; c < ch; ++c) {
        T wsum = T(0);
        const T* gs = &g.data[static_cast<size_t>(c) * n];
        for (int i = 0; i < n; ++i) wsum += gs[i];
        const T w = wsum / T(n);
        const T* fs = &feature.data[static_cast<size_t>(c) * n];
        for (int i = 0; i < n; ++i) cam.pixels[static_cast<size_t>(i)] += static_cast<float>(w * fs[i]);
    }
    for (auto& v : cam.pixels) v = std::max(v, 0.0f);

    GrayImage up = resize(cam, net.input_shape[2], net.input_shape[1]);
    const auto [mn, mx] = min_max(up);
    if (mx > mn) {
        for (auto& v : up.pixels) v = (v - mn) / (mx - mn);
    }
    return up;
}

} // namespace ocularage
