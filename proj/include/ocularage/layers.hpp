#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "ocularage/rng.hpp"
#include "ocularage/tensor.hpp"

namespace ocularage {

// Layers keep their own parameter gradients; backward() takes the forward
// input (saved by the network cache) and the output gradient, accumulates
// parameter gradients, and returns the input gradient. All layers are
// single-sample: activations are CHW or flat vectors, no batch axis.

template <typename T>
struct Conv2DT {
    int in_c = 1, out_c = 1, k = 3, stride = 1, pad = 0;
    TensorT<T> w, b, gw, gb;

    Conv2DT() = default;
    Conv2DT(int ic, int oc, int kk, int s, int p) : in_c(ic), out_c(oc), k(kk), stride(s), pad(p) {
        w = TensorT<T>({out_c, in_c, k, k});
        b = TensorT<T>({out_c});
        gw = TensorT<T>({out_c, in_c, k, k});
        gb = TensorT<T>({out_c});
    }

    void init(Rng& rng) {
        const double std = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
        for (auto& v : w.data) v = static_cast<T>(std * rng.normal());
        b.fill(T(0));
    }

    std::vector<int> out_shape(const std::vector<int>& in) const {
        const int oh = (in[1] + 2 * pad - k) / stride + 1;
        const int ow = (in[2] + 2 * pad - k) / stride + 1;
        if (in[0] != in_c || oh < 1 || ow < 1) throw ShapeMismatch("Conv2D: bad input shape");
        return {out_c, oh, ow};
    }

    TensorT<T> forward(const TensorT<T>& x) const {
        if (x.ndim() != 3) throw ShapeMismatch("Conv2D expects CHW input");
        TensorT<T> y(out_shape(x.shape));
        const int ih = x.shape[1], iw = x.shape[2];
        const int oh = y.shape[1], ow = y.shape[2];
        for (int oc = 0; oc < out_c; ++oc) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) y.at(oc, oy, ox) = b[oc];
            }
            for (int ic = 0; ic < in_c; ++ic) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const T wv = w.data[((static_cast<size_t>(oc) * in_c + ic) * k + ky) * k + kx];
                        if (wv == T(0)) continue;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride + ky - pad;
                            if (iy < 0 || iy >= ih) continue;
                            for (int ox = 0; ox < ow; ++ox) {
                                const int ix = ox * stride + kx - pad;
                                if (ix < 0 || ix >= iw) continue;
                                y.at(oc, oy, ox) += wv * x.at(ic, iy, ix);
                            }
                        }
                    }
                }
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) {
        TensorT<T> gin(x.shape);
        const int ih = x.shape[1], iw = x.shape[2];
        const int oh = g.shape[1], ow = g.shape[2];
        for (int oc = 0; oc < out_c; ++oc) {
            T acc_b = T(0);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) acc_b += g.at(oc, oy, ox);
            gb[static_cast<size_t>(oc)] += acc_b;
            for (int ic = 0; ic < in_c; ++ic) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const size_t wi = ((static_cast<size_t>(oc) * in_c + ic) * k + ky) * k + kx;
                        const T wv = w.data[wi];
                        T acc_w = T(0);
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride + ky - pad;
                            if (iy < 0 || iy >= ih) continue;
                            for (int ox = 0; ox < ow; ++ox) {
                                const int ix = ox * stride + kx - pad;
                                if (ix < 0 || ix >= iw) continue;
                                const T gv = g.at(oc, oy, ox);
                                acc_w += gv * x.at(ic, iy, ix);
                                gin.at(ic, iy, ix) += wv * gv;
                            }
                        }
                        gw.data[wi] += acc_w;
                    }
                }
            }
        }
        return gin;
    }
};

template <typename T>
struct DepthwiseConv2DT {
    int channels = 1, k = 3, stride = 1, pad = 0;
    TensorT<T> w, b, gw, gb; // w: [c, k, k]

    DepthwiseConv2DT() = default;
    DepthwiseConv2DT(int c, int kk, int s, int p) : channels(c), k(kk), stride(s), pad(p) {
        w = TensorT<T>({channels, k, k});
        b = TensorT<T>({channels});
        gw = TensorT<T>({channels, k, k});
        gb = TensorT<T>({channels});
    }

    void init(Rng& rng) {
        const double std = std::sqrt(2.0 / (static_cast<double>(k) * k));
        for (auto& v : w.data) v = static_cast<T>(std * rng.normal());
        b.fill(T(0));
    }

    std::vector<int> out_shape(const std::vector<int>& in) const {
        const int oh = (in[1] + 2 * pad - k) / stride + 1;
        const int ow = (in[2] + 2 * pad - k) / stride + 1;
        if (in[0] != channels || oh < 1 || ow < 1)
            throw ShapeMismatch("DepthwiseConv2D: bad input shape");
        return {channels, oh, ow};
    }

    TensorT<T> forward(const TensorT<T>& x) const {
        if (x.ndim() != 3) throw ShapeMismatch("DepthwiseConv2D expects CHW input");
        TensorT<T> y(out_shape(x.shape));
        const int ih = x.shape[1], iw = x.shape[2];
        const int oh = y.shape[1], ow = y.shape[2];
        for (int c = 0; c < channels; ++c) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    T acc = b[static_cast<size_t>(c)];
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= ih) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= iw) continue;
                            acc += w.at(c, ky, kx) * x.at(c, iy, ix);
                        }
                    }
                    y.at(c, oy, ox) = acc;
                }
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) {
        TensorT<T> gin(x.shape);
        const int ih = x.shape[1], iw = x.shape[2];
        const int oh = g.shape[1], ow = g.shape[2];
        for (int c = 0; c < channels; ++c) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const T gv = g.at(c, oy, ox);
                    gb[static_cast<size_t>(c)] += gv;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= ih) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= iw) continue;
                            gw.at(c, ky, kx) += gv * x.at(c, iy, ix);
                            gin.at(c, iy, ix) += w.at(c, ky, kx) * gv;
                        }
                    }
                }
            }
        }
        return gin;
    }
};

template <typename T>
struct DenseT {
    int in = 1, out = 1;
    TensorT<T> w, b, gw, gb; // w: [out, in]

    DenseT() = default;
    DenseT(int i, int o) : in(i), out(o) {
        w = TensorT<T>({out, in});
        b = TensorT<T>({out});
        gw = TensorT<T>({out, in});
        gb = TensorT<T>({out});
    }

    void init(Rng& rng) {
        const double std = std::sqrt(2.0 / static_cast<double>(in));
        for (auto& v : w.data) v = static_cast<T>(std * rng.normal());
        b.fill(T(0));
    }

    TensorT<T> forward(const TensorT<T>& x) const {
        if (x.numel() != in) throw ShapeMismatch("Dense: input size mismatch");
        TensorT<T> y({out});
        for (int o = 0; o < out; ++o) {
            T acc = b[static_cast<size_t>(o)];
            const T* wr = &w.data[static_cast<size_t>(o) * in];
            for (int i = 0; i < in; ++i) acc += wr[i] * x.data[static_cast<size_t>(i)];
            y[static_cast<size_t>(o)] = acc;
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) {
        TensorT<T> gin(x.shape);
        for (int o = 0; o < out; ++o) {
            const T gv = g[static_cast<size_t>(o)];
            gb[static_cast<size_t>(o)] += gv;
            const T* wr = &w.data[static_cast<size_t>(o) * in];
            T* gwr = &gw.data[static_cast<size_t>(o) * in];
            for (int i = 0; i < in; ++i) {
                gwr[i] += gv * x.data[static_cast<size_t>(i)];
                gin.data[static_cast<size_t>(i)] += wr[i] * gv;
            }
        }
        return gin;
    }
};

template <typename T>
struct ReLUT {
    TensorT<T> forward(const TensorT<T>& x) const {
        TensorT<T> y = x;
        for (auto& v : y.data) v = v > T(0) ? v : T(0);
        return y;
    }
    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) const {
        TensorT<T> gin = g;
        for (size_t i = 0; i < gin.data.size(); ++i)
            if (x.data[i] <= T(0)) gin.data[i] = T(0);
        return gin;
    }
};

template <typename T>
struct HardSwishT {
    TensorT<T> forward(const TensorT<T>& x) const {
        TensorT<T> y = x;
        for (auto& v : y.data) {
            const T r = std::clamp(v + T(3), T(0), T(6));
            v = v * r / T(6);
        }
        return y;
    }
    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) const {
        TensorT<T> gin = g;
        for (size_t i = 0; i < gin.data.size(); ++i) {
            const T v = x.data[i];
            T d;
            if (v <= T(-3)) d = T(0);
            else if (v >= T(3)) d = T(1);
            else d = (T(2) * v + T(3)) / T(6);
            gin.data[i] *= d;
        }
        return gin;
    }
};

/// Per-channel affine normalization by the running statistics in both modes;
/// the statistics are recalibrated from data via observe()/commit_stats() at
/// epoch boundaries. Per-image statistics would zero-center every channel and
/// erase global scale differences between images, which is signal here, not
/// nuisance.
template <typename T>
struct BatchNormT {
    int channels = 1;
    T eps = T(1e-5);
    TensorT<T> gamma, beta, ggamma, gbeta;
    TensorT<T> running_mean, running_var;
    TensorT<T> obs_m1, obs_m2; // accumulated per-image mean and second moment
    int64_t obs_n = 0;

    BatchNormT() = default;
    explicit BatchNormT(int c) : channels(c) {
        gamma = TensorT<T>({channels}, T(1));
        beta = TensorT<T>({channels});
        ggamma = TensorT<T>({channels});
        gbeta = TensorT<T>({channels});
        running_mean = TensorT<T>({channels});
        running_var = TensorT<T>({channels}, T(1));
        obs_m1 = TensorT<T>({channels});
        obs_m2 = TensorT<T>({channels});
    }

    void check(const TensorT<T>& x) const {
        if (x.ndim() != 3 || x.shape[0] != channels)
            throw ShapeMismatch("BatchNorm: expects CHW with matching channels");
        if (x.shape[1] * x.shape[2] < 2)
            throw ShapeMismatch("BatchNorm: spatial size must be >= 2");
    }

    TensorT<T> forward(const TensorT<T>& x, bool) {
        check(x);
        const int n = x.shape[1] * x.shape[2];
        TensorT<T> y(x.shape);
        for (int c = 0; c < channels; ++c) {
            const T* xs = &x.data[static_cast<size_t>(c) * n];
            T* ys = &y.data[static_cast<size_t>(c) * n];
            const T mean = running_mean[static_cast<size_t>(c)];
            const T inv = T(1) / std::sqrt(running_var[static_cast<size_t>(c)] + eps);
            const T gsc = gamma[static_cast<size_t>(c)];
            const T bsh = beta[static_cast<size_t>(c)];
            for (int i = 0; i < n; ++i) ys[i] = gsc * (xs[i] - mean) * inv + bsh;
        }
        return y;
    }

    /// Accumulates per-channel first and second moments of x for the next
    /// commit_stats(). Leaves the running statistics untouched.
    void observe(const TensorT<T>& x) {
        check(x);
        const int n = x.shape[1] * x.shape[2];
        for (int c = 0; c < channels; ++c) {
            const T* xs = &x.data[static_cast<size_t>(c) * n];
            T s = T(0), sq = T(0);
            for (int i = 0; i < n; ++i) {
                s += xs[i];
                sq += xs[i] * xs[i];
            }
            obs_m1[static_cast<size_t>(c)] += s / T(n);
            obs_m2[static_cast<size_t>(c)] += sq / T(n);
        }
        ++obs_n;
    }

    /// Replaces the running statistics with the pooled statistics of every
    /// image observed since the previous commit.
    void commit_stats() {
        if (obs_n == 0) throw StaleCache("BatchNorm: commit_stats without observations");
        for (int c = 0; c < channels; ++c) {
            const T mu = obs_m1[static_cast<size_t>(c)] / T(obs_n);
            const T var = obs_m2[static_cast<size_t>(c)] / T(obs_n) - mu * mu;
            running_mean[static_cast<size_t>(c)] = mu;
            running_var[static_cast<size_t>(c)] = var < T(0) ? T(0) : var;
        }
        obs_m1.fill(T(0));
        obs_m2.fill(T(0));
        obs_n = 0;
    }

    // The running statistics are constants as far as the gradient is concerned.
    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) {
        check(x);
        const int n = x.shape[1] * x.shape[2];
        TensorT<T> gin(x.shape);
        for (int c = 0; c < channels; ++c) {
            const T* xs = &x.data[static_cast<size_t>(c) * n];
            const T* gs = &g.data[static_cast<size_t>(c) * n];
            T* gi = &gin.data[static_cast<size_t>(c) * n];
            const T mean = running_mean[static_cast<size_t>(c)];
            const T inv = T(1) / std::sqrt(running_var[static_cast<size_t>(c)] + eps);
            T sum_g = T(0), sum_gx = T(0);
            for (int i = 0; i < n; ++i) {
                sum_g += gs[i];
                sum_gx += gs[i] * (xs[i] - mean) * inv;
            }
            ggamma[static_cast<size_t>(c)] += sum_gx;
            gbeta[static_cast<size_t>(c)] += sum_g;
            const T gsc = gamma[static_cast<size_t>(c)];
            for (int i = 0; i < n; ++i) gi[i] = gsc * inv * gs[i];
        }
        return gin;
    }
};

template <typename T>
struct MaxPoolT {
    int k = 2, stride = 2;

    MaxPoolT() = default;
    MaxPoolT(int kk, int s) : k(kk), stride(s) {}

    std::vector<int> out_shape(const std::vector<int>& in) const {
        if (in[1] < k || in[2] < k) throw ShapeMismatch("MaxPool: input smaller than kernel");
        return {in[0], (in[1] - k) / stride + 1, (in[2] - k) / stride + 1};
    }

    TensorT<T> forward(const TensorT<T>& x) const {
        if (x.ndim() != 3) throw ShapeMismatch("MaxPool expects CHW input");
        TensorT<T> y(out_shape(x.shape));
        pool(x, &y, nullptr);
        return y;
    }

    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) const {
        TensorT<T> y(out_shape(x.shape));
        std::vector<size_t> arg(static_cast<size_t>(y.numel()));
        pool(x, &y, &arg);
        TensorT<T> gin(x.shape);
        for (size_t i = 0; i < arg.size(); ++i) gin.data[arg[i]] += g.data[i];
        return gin;
    }

private:
    void pool(const TensorT<T>& x, TensorT<T>* y, std::vector<size_t>* arg) const {
        const int c_n = x.shape[0], ih = x.shape[1], iw = x.shape[2];
        const int oh = y->shape[1], ow = y->shape[2];
        size_t oi = 0;
        for (int c = 0; c < c_n; ++c) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++oi) {
                    T best = -std::numeric_limits<T>::infinity();
                    size_t best_i = 0;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride + ky;
                        if (iy >= ih) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride + kx;
                            if (ix >= iw) continue;
                            const size_t xi = (static_cast<size_t>(c) * ih + iy) * iw + ix;
                            if (x.data[xi] > best) {
                                best = x.data[xi];
                                best_i = xi;
                            }
                        }
                    }
                    y->data[oi] = best;
                    if (arg) (*arg)[oi] = best_i;
                }
            }
        }
    }
};

template <typename T>
struct GlobalAvgPoolT {
    TensorT<T> forward(const TensorT<T>& x) const {
        if (x.ndim() != 3) throw ShapeMismatch("GlobalAvgPool expects CHW input");
        const int n = x.shape[1] * x.shape[2];
        TensorT<T> y({x.shape[0]});
        for (int c = 0; c < x.shape[0]; ++c) {
            T acc = T(0);
            const T* xs = &x.data[static_cast<size_t>(c) * n];
            for (int i = 0; i < n; ++i) acc += xs[i];
            y[static_cast<size_t>(c)] = acc / T(n);
        }
        return y;
    }
    TensorT<T> backward(const TensorT<T>& x, const TensorT<T>& g) const {
        const int n = x.shape[1] * x.shape[2];
        TensorT<T> gin(x.shape);
        for (int c = 0; c < x.shape[0]; ++c) {
            const T gv = g[static_cast<size_t>(c)] / T(n);
            T* gi = &gin.data[static_cast<size_t>(c) * n];
            for (int i = 0; i < n; ++i) gi[i] = gv;
        }
        return gin;
    }
};

template <typename T>
using LayerT = std::variant<Conv2DT<T>, DepthwiseConv2DT<T>, DenseT<T>, ReLUT<T>, HardSwishT<T>,
                            BatchNormT<T>, MaxPoolT<T>, GlobalAvgPoolT<T>>;

using Layer = LayerT<float>;

} // namespace ocularage
