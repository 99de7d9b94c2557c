#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "ocularage/losses.hpp"
#include "ocularage/model.hpp"
#include "ocularage/rng.hpp"

using namespace ocularage;

// Central finite differences in double precision against every analytic
// gradient, layer by layer and through the full two-headed network.

namespace {

using DT = TensorT<double>;

constexpr double kH = 1e-5;
constexpr double kTol = 1e-4;

double rel_err(double a, double f) {
    return std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
}

DT random_d(std::vector<int> shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    DT t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

double weighted_sum(const DT& y, const DT& w) {
    double s = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * w.data[i];
    return s;
}

void fd_against(std::vector<double>& storage, const std::vector<double>& analytic,
                const std::function<double()>& eval, const char* what) {
    REQUIRE(storage.size() == analytic.size());
    for (size_t i = 0; i < storage.size(); ++i) {
        const double keep = storage[i];
        storage[i] = keep + kH;
        const double lp = eval();
        storage[i] = keep - kH;
        const double lm = eval();
        storage[i] = keep;
        const double fd = (lp - lm) / (2.0 * kH);
        INFO(what << " element " << i << ": analytic " << analytic[i] << " fd " << fd);
        REQUIRE(rel_err(analytic[i], fd) < kTol);
    }
}

} // namespace

TEST_CASE("conv2d gradients match finite differences") {
    Conv2DT<double> conv(2, 3, 3, 2, 1);
    Rng rng(1);
    conv.init(rng);
    DT x = random_d({2, 5, 6}, 2);
    const DT w = random_d(conv.out_shape(x.shape), 3);
    const auto eval = [&] { return weighted_sum(conv.forward(x), w); };
    conv.gw.fill(0.0);
    conv.gb.fill(0.0);
    const DT gin = conv.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
    fd_against(conv.w.data, conv.gw.data, eval, "weight");
    fd_against(conv.b.data, conv.gb.data, eval, "bias");
}

TEST_CASE("depthwise conv gradients match finite differences") {
    DepthwiseConv2DT<double> dw(3, 3, 1, 1);
    Rng rng(4);
    dw.init(rng);
    DT x = random_d({3, 4, 5}, 5);
    const DT w = random_d(dw.out_shape(x.shape), 6);
    const auto eval = [&] { return weighted_sum(dw.forward(x), w); };
    dw.gw.fill(0.0);
    dw.gb.fill(0.0);
    const DT gin = dw.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
    fd_against(dw.w.data, dw.gw.data, eval, "weight");
    fd_against(dw.b.data, dw.gb.data, eval, "bias");
}

TEST_CASE("dense gradients match finite differences") {
    DenseT<double> d(8, 4);
    Rng rng(7);
    d.init(rng);
    DT x = random_d({8}, 8);
    const DT w = random_d({4}, 9);
    const auto eval = [&] { return weighted_sum(d.forward(x), w); };
    d.gw.fill(0.0);
    d.gb.fill(0.0);
    const DT gin = d.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
    fd_against(d.w.data, d.gw.data, eval, "weight");
    fd_against(d.b.data, d.gb.data, eval, "bias");
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
    ReLUT<double> relu;
    Rng rng(10);
    DT x({30});
    for (auto& v : x.data) {
        v = rng.uniform(0.1, 1.0); // keep h-balls clear of zero
        if (rng.bernoulli(0.5)) v = -v;
    }
    const DT w = random_d({30}, 11);
    const auto eval = [&] { return weighted_sum(relu.forward(x), w); };
    const DT gin = relu.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
}

TEST_CASE("hard swish gradient matches finite differences away from the kinks") {
    HardSwishT<double> hs;
    Rng rng(12);
    DT x({40});
    for (auto& v : x.data) {
        do {
            v = rng.uniform(-4.5, 4.5);
        } while (std::abs(std::abs(v) - 3.0) < 0.1);
    }
    const DT w = random_d({40}, 13);
    const auto eval = [&] { return weighted_sum(hs.forward(x), w); };
    const DT gin = hs.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
}

TEST_CASE("batch norm training-mode gradients match finite differences") {
    BatchNormT<double> bn(3);
    Rng rng(14);
    for (auto& v : bn.gamma.data) v = rng.uniform(0.5, 1.5);
    for (auto& v : bn.beta.data) v = rng.uniform(-0.5, 0.5);
    DT x = random_d({3, 4, 5}, 15);
    const DT w = random_d({3, 4, 5}, 16);
    const auto eval = [&] { return weighted_sum(bn.forward(x, true), w); };
    bn.ggamma.fill(0.0);
    bn.gbeta.fill(0.0);
    const DT gin = bn.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
    fd_against(bn.gamma.data, bn.ggamma.data, eval, "gamma");
    fd_against(bn.beta.data, bn.gbeta.data, eval, "beta");
}

TEST_CASE("max pool gradient matches finite differences on distinct values") {
    MaxPoolT<double> mp(2, 2);
    Rng rng(17);
    DT x({3, 6, 6});
    std::vector<int> order(x.data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order.begin(), order.end());
    for (size_t i = 0; i < x.data.size(); ++i)
        x.data[i] = 0.01 * order[i]; // all gaps >= 0.01 >> 2h, argmax is stable
    const DT w = random_d(mp.out_shape(x.shape), 18);
    const auto eval = [&] { return weighted_sum(mp.forward(x), w); };
    const DT gin = mp.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
}

TEST_CASE("global average pool gradient matches finite differences") {
    GlobalAvgPoolT<double> gap;
    DT x = random_d({2, 3, 4}, 19);
    const DT w = random_d({2}, 20);
    const auto eval = [&] { return weighted_sum(gap.forward(x), w); };
    const DT gin = gap.backward(x, w);
    fd_against(x.data, gin.data, eval, "input");
}

TEST_CASE("full multi-task network gradients match finite differences") {
    MultiTaskNetT<double> net;
    net.input_shape = {1, 8, 8};
    net.backbone.layers.push_back(Conv2DT<double>(1, 2, 3, 2, 1));
    net.backbone.layers.push_back(BatchNormT<double>(2));
    net.backbone.layers.push_back(HardSwishT<double>{});
    net.backbone.layers.push_back(MaxPoolT<double>(2, 2));
    net.backbone.layers.push_back(GlobalAvgPoolT<double>{});
    net.backbone.layers.push_back(DenseT<double>(2, 4));
    net.backbone.layers.push_back(ReLUT<double>{});
    net.head_cls.layers.push_back(DenseT<double>(4, 2));
    net.head_reg.layers.push_back(DenseT<double>(4, 1));
    Rng rng(99);
    net.backbone.init(rng);
    net.head_cls.init(rng);
    net.head_reg.init(rng);
    // push activations off the relu/pool decision boundaries
    std::get<DenseT<double>>(net.backbone.layers[5]).b.fill(0.3);
    std::get<DenseT<double>>(net.head_cls.layers[0]).b.fill(0.1);
    std::get<DenseT<double>>(net.head_reg.layers[0]).b.fill(0.2);

    DT x = random_d({1, 8, 8}, 100);
    const double age = 8.0;
    const double alpha = 0.3;
    const std::array<double, 2> cw = {1.2, 0.8};

    const auto eval = [&] {
        const auto out = net.forward(x, true, false);
        const FocalResult f =
            focal_loss({out.logits[0], out.logits[1]}, AgeGroup::Young, 2.0, cw, 0.05);
        return f.loss + alpha * mse_value(out.reg[0], age);
    };

    net.zero_grad();
    const auto out = net.forward(x, true, true);
    const FocalResult f =
        focal_loss({out.logits[0], out.logits[1]}, AgeGroup::Young, 2.0, cw, 0.05);
    DT glogits({2});
    glogits.data = {f.dlogits[0], f.dlogits[1]};
    DT greg({1});
    greg.data = {alpha * 2.0 * (out.reg[0] - age)};
    const DT gin = net.backward(glogits, greg);

    fd_against(x.data, gin.data, eval, "network input");
    for (auto& p : net.params()) {
        REQUIRE(p.grad != nullptr);
        fd_against(p.value->data, p.grad->data, eval, p.name.c_str());
    }
}
