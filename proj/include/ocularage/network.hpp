#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocularage/layers.hpp"

namespace ocularage {

template <typename T>
struct ParamRef {
    std::string name;
    TensorT<T>* value = nullptr;
    TensorT<T>* grad = nullptr; // null for buffers (running stats)
};

/// Sequential stack over the layer variant. forward() optionally records the
/// per-layer inputs into a cache that backward() consumes; backward without a
/// matching cache is a contract violation.
template <typename T>
struct SequentialT {
    std::vector<LayerT<T>> layers;
    std::vector<TensorT<T>> cache; // input of each layer from the last cached forward

    TensorT<T> forward(TensorT<T> x, bool training, bool record) {
        if (record) {
            cache.clear();
            cache.reserve(layers.size());
        }
        for (auto& layer : layers) {
            if (record) cache.push_back(x);
            x = std::visit(
                [&](auto& l) -> TensorT<T> {
                    using L = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<L, BatchNormT<T>>) return l.forward(x, training);
                    else return l.forward(x);
                },
                layer);
        }
        return x;
    }

    TensorT<T> forward_eval(const TensorT<T>& x) {
        TensorT<T> y = x;
        for (auto& layer : layers) {
            y = std::visit(
                [&](auto& l) -> TensorT<T> {
                    using L = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<L, BatchNormT<T>>) return l.forward(y, false);
                    else return l.forward(y);
                },
                layer);
        }
        return y;
    }

    TensorT<T> backward(TensorT<T> g) {
        if (cache.size() != layers.size())
            throw StaleCache("backward called without a recorded forward");
        for (size_t i = layers.size(); i-- > 0;) {
            g = std::visit([&](auto& l) -> TensorT<T> { return l.backward(cache[i], g); },
                           layers[i]);
        }
        cache.clear();
        return g;
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        for (size_t i = 0; i < layers.size(); ++i) {
            const std::string base = prefix + "." + std::to_string(i);
            std::visit(
                [&](auto& l) {
                    using L = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<L, Conv2DT<T>> ||
                                  std::is_same_v<L, DepthwiseConv2DT<T>> ||
                                  std::is_same_v<L, DenseT<T>>) {
                        out.push_back({base + ".w", &l.w, &l.gw});
                        out.push_back({base + ".b", &l.b, &l.gb});
                    } else if constexpr (std::is_same_v<L, BatchNormT<T>>) {
                        out.push_back({base + ".gamma", &l.gamma, &l.ggamma});
                        out.push_back({base + ".beta", &l.beta, &l.gbeta});
                    }
                },
                layers[i]);
        }
    }

    void collect_buffers(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        for (size_t i = 0; i < layers.size(); ++i) {
            const std::string base = prefix + "." + std::to_string(i);
            std::visit(
                [&](auto& l) {
                    using L = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<L, BatchNormT<T>>) {
                        out.push_back({base + ".running_mean", &l.running_mean, nullptr});
                        out.push_back({base + ".running_var", &l.running_var, nullptr});
                    }
                },
                layers[i]);
        }
    }

    void init(Rng& rng) {
        for (auto& layer : layers) {
            std::visit(
                [&](auto& l) {
                    using L = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<L, Conv2DT<T>> ||
                                  std::is_same_v<L, DepthwiseConv2DT<T>> ||
                                  std::is_same_v<L, DenseT<T>>) {
                        l.init(rng);
                    }
                },
                layer);
        }
    }

    void zero_grad() {
        for (auto& layer : layers) {
            std::visit(
                [&](auto& l) {
                    using L = std::decay_t<decltype(l)>;
                    if constexpr (std::is_same_v<L, Conv2DT<T>> ||
                                  std::is_same_v<L, DepthwiseConv2DT<T>> ||
                                  std::is_same_v<L, DenseT<T>>) {
                        l.gw.fill(T(0));
                        l.gb.fill(T(0));
                    } else if constexpr (std::is_same_v<L, BatchNormT<T>>) {
                        l.ggamma.fill(T(0));
                        l.gbeta.fill(T(0));
                    }
                },
                layer);
        }
    }
};

using Sequential = SequentialT<float>;

// --- topology (de)serialization -------------------------------------------

template <typename T>
inline nlohmann::json layer_spec(const LayerT<T>& layer) {
    using nlohmann::json;
    return std::visit(
        [](const auto& l) -> json {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Conv2DT<T>>)
                return {{"kind", "Conv2D"}, {"in", l.in_c}, {"out", l.out_c},
                        {"k", l.k},         {"stride", l.stride}, {"pad", l.pad}};
            else if constexpr (std::is_same_v<L, DepthwiseConv2DT<T>>)
                return {{"kind", "DepthwiseConv2D"}, {"channels", l.channels},
                        {"k", l.k}, {"stride", l.stride}, {"pad", l.pad}};
            else if constexpr (std::is_same_v<L, DenseT<T>>)
                return {{"kind", "Dense"}, {"in", l.in}, {"out", l.out}};
            else if constexpr (std::is_same_v<L, ReLUT<T>>)
                return {{"kind", "ReLU"}};
            else if constexpr (std::is_same_v<L, HardSwishT<T>>)
                return {{"kind", "HardSwish"}};
            else if constexpr (std::is_same_v<L, BatchNormT<T>>)
                return {{"kind", "BatchNorm"}, {"channels", l.channels}};
            else if constexpr (std::is_same_v<L, MaxPoolT<T>>)
                return {{"kind", "MaxPool"}, {"k", l.k}, {"stride", l.stride}};
            else
                return {{"kind", "GlobalAvgPool"}};
        },
        layer);
}

template <typename T>
inline LayerT<T> layer_from_spec(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "Conv2D")
        return Conv2DT<T>(j.at("in").get<int>(), j.at("out").get<int>(), j.at("k").get<int>(),
                          j.at("stride").get<int>(), j.at("pad").get<int>());
    if (kind == "DepthwiseConv2D")
        return DepthwiseConv2DT<T>(j.at("channels").get<int>(), j.at("k").get<int>(),
                                   j.at("stride").get<int>(), j.at("pad").get<int>());
    if (kind == "Dense") return DenseT<T>(j.at("in").get<int>(), j.at("out").get<int>());
    if (kind == "ReLU") return ReLUT<T>{};
    if (kind == "HardSwish") return HardSwishT<T>{};
    if (kind == "BatchNorm") return BatchNormT<T>(j.at("channels").get<int>());
    if (kind == "MaxPool") return MaxPoolT<T>(j.at("k").get<int>(), j.at("stride").get<int>());
    if (kind == "GlobalAvgPool") return GlobalAvgPoolT<T>{};
    throw CorruptCheckpoint("unknown layer kind: " + kind);
}

template <typename T>
inline nlohmann::json sequential_spec(const SequentialT<T>& net) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : net.layers) arr.push_back(layer_spec<T>(l));
    return arr;
}

template <typename T>
inline SequentialT<T> sequential_from_spec(const nlohmann::json& arr) {
    SequentialT<T> net;
    for (const auto& j : arr) net.layers.push_back(layer_from_spec<T>(j));
    return net;
}

} // namespace ocularage
