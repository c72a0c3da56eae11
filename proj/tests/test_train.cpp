// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "doctest.h"
#include "hhm/train.hpp"
#include "test_util.hpp"

using namespace hhm;
using hhm::test::uniform;

namespace {

NetSpec toy_spec() {
    NetSpec s;
    s.in_channels = 2;
    s.frames = 2;
    s.size = 4;
    s.layers.push_back(LayerSpec::make_conv({"c1", 4, {1, 3, 3}, {1, 1, 1}, {0, 1, 1}, true}));
    return s;
}

// Class 1 has a positive mean in channel 0, class 0 a negative one.
TensorSource<double> toy_source(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t per = toy_spec().input_shape().numel();
    Tensor<double> x({n, 2, 2, 4, 4});
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = i % 2;
        for (std::size_t j = 0; j < per; ++j) {
            const bool ch0 = j < per / 2;
            x.data[i * per + j] = uniform(rng, -0.3, 0.3) + (ch0 ? (y[i] ? 0.5 : -0.5) : 0.0);
        }
    }
    return TensorSource<double>(std::move(x), std::move(y));
}

}  // namespace

TEST_CASE("train: zero learning rate leaves every tensor unchanged") {
    Network<double> net(toy_spec());
    auto p = net.init_params(1);
    auto src = toy_source(20, 2);
    TrainConfig cfg;
    cfg.learning_rate = 0;
    cfg.epochs = 3;
    auto r = train(net, p, src, cfg);
    for (std::size_t i = 0; i < p.items.size(); ++i) CHECK(r.params.items[i].value == p.items[i].value);
    CHECK(r.loss_curve.size() == 3);
}

TEST_CASE("train: frozen tensors are bit-identical after 10 epochs") {
    Network<double> net(toy_spec());
    auto p = net.init_params(3);
    p.set_frozen_prefix(1, true);
    auto src = toy_source(20, 4);
    TrainConfig cfg;
    cfg.epochs = 10;
    auto r = train(net, p, src, cfg);
    CHECK(r.params.items[0].value == p.items[0].value);
    CHECK_FALSE(r.params.items[1].value == p.items[1].value);
    CHECK_FALSE(r.params.at("head.weight").value == p.at("head.weight").value);
}

TEST_CASE("train: loss decreases monotonically on a separable toy set") {
    Network<double> net(toy_spec());
    auto src = toy_source(20, 5);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 6;
    auto r = train(net, net.init_params(7), src, cfg);
    REQUIRE(r.loss_curve.size() == 5);
    for (int e = 1; e < 5; ++e) CHECK(r.loss_curve[e] <= r.loss_curve[e - 1] + 1e-6);
}

TEST_CASE("train: same seed and data give identical params") {
    Network<double> net(toy_spec());
    auto src = toy_source(20, 8);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.seed = 9;
    auto a = train(net, net.init_params(10), src, cfg);
    auto b = train(net, net.init_params(10), src, cfg);
    for (std::size_t i = 0; i < a.params.items.size(); ++i) CHECK(a.params.items[i].value == b.params.items[i].value);
    CHECK(a.loss_curve == b.loss_curve);
}

TEST_CASE("train: identity feature stats reproduce plain head training") {
    Network<double> net(toy_spec());
    auto p = net.init_params(11);
    p.set_frozen_prefix(net.spec().backbone_param_count(), true);
    auto src = toy_source(20, 12);
    TrainConfig cfg;
    cfg.epochs = 4;
    const FeatureStats<double> id{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
    auto plain = train(net, p, src, cfg);
    auto standard = train(net, p, src, cfg, {}, &id);
    for (std::size_t i = 0; i < p.items.size(); ++i)
        for (std::size_t j = 0; j < p.items[i].value.numel(); ++j)
            CHECK(standard.params.items[i].value.data[j] == doctest::Approx(plain.params.items[i].value.data[j]).epsilon(1e-12));
}

TEST_CASE("train: standardized head matches logistic regression on standardized features") {
    Network<double> net(toy_spec());
    auto p = net.init_params(13);
    p.set_frozen_prefix(net.spec().backbone_param_count(), true);
    const int n = 24;
    auto src = toy_source(n, 14);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = n;
    cfg.learning_rate = 0.05;
    const auto st = feature_stats(net, p, src);
    REQUIRE(st.mean.size() == 4);
    auto r = train(net, p, src, cfg, {}, &st);

    // Full-batch momentum descent written out on z = (f - mean) / scale.
    std::vector<std::vector<double>> z(n);
    std::vector<double> in;
    for (int i = 0; i < n; ++i) {
        src.fill(i, 0, in);
        auto f = net.features(p, in.data());
        for (int c = 0; c < 4; ++c) z[i].push_back((f[c] - st.mean[c]) / st.scale[c]);
    }
    std::vector<double> w(4), vw(4, 0.0);
    double b = p.at("head.bias").value.data[0], vb = 0;
    for (int c = 0; c < 4; ++c) {
        w[c] = p.at("head.weight").value.data[c] * st.scale[c];
        b += p.at("head.weight").value.data[c] * st.mean[c];
    }
    for (int e = 0; e < cfg.epochs; ++e) {
        std::vector<double> gw(4, 0.0);
        double gb = 0;
        for (int i = 0; i < n; ++i) {
            double logit = b;
            for (int c = 0; c < 4; ++c) logit += w[c] * z[i][c];
            const double d = (1.0 / (1.0 + std::exp(-logit)) - src.label(i)) / n;
            for (int c = 0; c < 4; ++c) gw[c] += d * z[i][c];
            gb += d;
        }
        for (int c = 0; c < 4; ++c) {
            vw[c] = cfg.momentum * vw[c] + gw[c];
            w[c] -= cfg.learning_rate * vw[c];
        }
        vb = cfg.momentum * vb + gb;
        b -= cfg.learning_rate * vb;
    }
    double bias = b;
    for (int c = 0; c < 4; ++c) {
        CHECK(r.params.at("head.weight").value.data[c] == doctest::Approx(w[c] / st.scale[c]).epsilon(1e-9));
        bias -= w[c] / st.scale[c] * st.mean[c];
    }
    CHECK(r.params.at("head.bias").value.data[0] == doctest::Approx(bias).epsilon(1e-9));
    for (std::size_t i = 0; i + 2 < p.items.size(); ++i) CHECK(r.params.items[i].value == p.items[i].value);
}

TEST_CASE("train: feature standardization requires a frozen backbone") {
    Network<double> net(toy_spec());
    auto p = net.init_params(15);
    auto src = toy_source(8, 16);
    const FeatureStats<double> id{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
    CHECK_THROWS_AS(train(net, p, src, TrainConfig{}, {}, &id), Error);
    p.set_frozen_prefix(net.spec().backbone_param_count(), true);
    const FeatureStats<double> bad{std::vector<double>(3, 0.0), std::vector<double>(3, 1.0)};
    CHECK_THROWS_AS(train(net, p, src, TrainConfig{}, {}, &bad), Error);
}

TEST_CASE("train: invalid config and empty data are rejected") {
    Network<double> net(toy_spec());
    TrainConfig cfg;
    cfg.batch_size = 0;
    auto src = toy_source(4, 1);
    CHECK_THROWS_AS(train(net, net.init_params(1), src, cfg), Error);
    TensorSource<double> empty(Tensor<double>({0, 2, 2, 4, 4}), {});
    CHECK_THROWS_AS(train(net, net.init_params(1), empty, TrainConfig{}), Error);
}

TEST_CASE("train: non-finite loss raises") {
    Network<double> net(toy_spec());
    auto p = net.init_params(1);
    p.at("head.bias").value.data[0] = std::numeric_limits<double>::quiet_NaN();
    auto src = toy_source(4, 1);
    CHECK_THROWS_WITH_AS(train(net, p, src, TrainConfig{}), doctest::Contains("non-finite"), Error);
}

TEST_CASE("transfer: backbone equals inflated pretrained weights; head moves") {
    NetSpec spec3 = NetSpec::i3d_mini(3, 16, 16);
    PretrainConfig pc;
    pc.stills_per_class = 2;
    pc.train.epochs = 1;
    pc.train.batch_size = 4;
    auto pre = pretrain_twin(spec3, pc);
    CHECK(pre.params.at("head.weight").value.dim(0) == 4);

    const std::size_t per = spec3.input_shape().numel();
    std::mt19937_64 rng(3);
    Tensor<float> x({4, 3, 16, 16, 16});
    for (auto& v : x.data) v = static_cast<float>(uniform(rng, -1, 1));
    for (std::size_t j = 0; j < per; ++j) x.data[j] += 0.5f, x.data[2 * per + j] += 0.5f;
    TensorSource<float> target(x, {1, 0, 1, 0});
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    auto r = transfer_pretrain_then_finetune(spec3, pre.params, target, cfg);

    Network<float> net3(spec3);
    auto expected = inflate_params(pre.params, spec3, net3.init_params(0), true);
    for (std::size_t i = 0; i < spec3.backbone_param_count(); ++i) {
        CHECK(r.params.items[i].frozen);
        CHECK(r.params.items[i].value == expected.items[i].value);
    }
    auto untrained = transfer_pretrain_then_finetune(spec3, pre.params, target, TrainConfig{0.01, 0.9, 2, 0, 0});
    CHECK_FALSE(r.params.at("head.weight").value == untrained.params.at("head.weight").value);

    auto scratch = scratch_head_finetune(spec3, target, cfg);
    for (std::size_t i = 0; i < spec3.backbone_param_count(); ++i) CHECK(scratch.params.items[i].frozen);
    CHECK(scratch.loss_curve.size() == 2);
}
