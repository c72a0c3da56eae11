// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "doctest.h"
#include "hhm/net.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>
#include <fstream>

using namespace hhm;
using hhm::test::random_tensor;
using hhm::test::uniform;
using hhm::test::max_rel_grad_error;
using hhm::test::micro_spec;
using hhm::test::naive_conv;
using hhm::test::random_params;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("conv3d: 1x1x1 kernel of weight 2 doubles the input") {
    std::mt19937_64 rng(1);
    auto x = random_tensor<double>({2, 1, 3, 4, 5}, rng);
    Tensor<double> w({1, 1, 1, 1, 1}, 2.0), b({1}, 0.0);
    auto y = conv3d_forward(x, w, b, {1, 1, 1}, {0, 0, 0});
    REQUIRE(y.dims == x.dims);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data[i] == 2.0 * x.data[i]);
}

TEST_CASE("conv3d: centered delta kernel with same padding is the identity") {
    std::mt19937_64 rng(2);
    auto x = random_tensor<double>({1, 1, 4, 5, 6}, rng);
    Tensor<double> w({1, 1, 3, 3, 3}), b({1});
    w.data[13] = 1.0;
    auto y = conv3d_forward(x, w, b, {1, 1, 1}, {1, 1, 1});
    CHECK(max_abs_diff(y.data, x.data) == 0.0);
}

TEST_CASE("conv3d: 2x3x3 kernel on a 2x4x4 input matches direct summation") {
    std::mt19937_64 rng(3);
    auto x = random_tensor<double>({1, 1, 2, 4, 4}, rng);
    auto w = random_tensor<double>({1, 1, 2, 3, 3}, rng);
    auto b = random_tensor<double>({1}, rng);
    auto y = conv3d_forward(x, w, b, {1, 1, 1}, {0, 0, 0});
    CHECK(max_abs_diff(y.data, naive_conv(x, w, b, {1, 1, 1}, {0, 0, 0}).data) < 1e-12);
}

TEST_CASE("conv3d: randomized shapes agree with direct summation") {
    std::mt19937_64 rng(4);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % (hi - lo + 1)); };
        const int N = pick(1, 2), C = pick(1, 3), O = pick(1, 3);
        std::array<int, 3> k{pick(1, 3), pick(1, 3), pick(1, 3)}, s{pick(1, 2), pick(1, 2), pick(1, 2)};
        std::array<int, 3> p{pick(0, k[0] - 1), pick(0, k[1] - 1), pick(0, k[2] - 1)};
        auto x = random_tensor<double>({N, C, pick(k[0], 5), pick(k[1], 7), pick(k[2], 7)}, rng);
        auto w = random_tensor<double>({O, C, k[0], k[1], k[2]}, rng);
        auto b = random_tensor<double>({O}, rng);
        worst = std::max(worst, max_abs_diff(conv3d_forward(x, w, b, s, p).data, naive_conv(x, w, b, s, p).data));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("conv3d: mismatched channels name the dims") {
    Tensor<double> x({1, 2, 3, 3, 3}), w({1, 3, 1, 1, 1}), b({1});
    try {
        conv3d_forward(x, w, b, {1, 1, 1}, {0, 0, 0});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Model);
        CHECK(std::string(e.what()).find("[1x2x3x3x3]") != std::string::npos);
    }
}

TEST_CASE("inflation repeats the kernel over time and divides by kT") {
    Tensor<double> k2({1, 1, 2, 2});
    k2.data = {1, 2, 3, 4};
    auto k3 = inflate_2d_to_3d(k2, 3);
    REQUIRE(k3.dims == std::vector<int>{1, 1, 3, 2, 2});
    for (int t = 0; t < 3; ++t) {
        CHECK(k3.data[t * 4 + 0] == doctest::Approx(1.0 / 3));
        CHECK(k3.data[t * 4 + 1] == doctest::Approx(2.0 / 3));
        CHECK(k3.data[t * 4 + 2] == doctest::Approx(1.0));
        CHECK(k3.data[t * 4 + 3] == doctest::Approx(4.0 / 3));
    }
    auto k1 = inflate_2d_to_3d(k2, 1);
    CHECK(k1.dims == std::vector<int>{1, 1, 1, 2, 2});
    CHECK(k1.data == k2.data);
}

TEST_CASE("boring video: inflated network reproduces the 2D twin on repeated frames") {
    NetSpec spec3 = NetSpec::i3d_mini(3, 56, 16);
    spec3.temporal_padding = TemporalPadding::Circular;
    NetSpec spec2 = spec3.twin_2d();
    Network<double> net2(spec2), net3(spec3);
    auto p2 = net2.init_params(11);
    std::mt19937_64 rng(12);
    for (auto& v : p2.at("head.weight").value.data) v = uniform(rng, -1, 1);
    auto p3 = inflate_params(p2, spec3, p2, true);

    auto frame = random_tensor<double>({3, 1, 56, 56}, rng);
    std::vector<double> clip(3 * 16 * 56 * 56);
    for (int c = 0; c < 3; ++c)
        for (int t = 0; t < 16; ++t)
            std::copy_n(frame.ptr() + c * 56 * 56, 56 * 56, clip.begin() + (c * 16 + t) * 56 * 56);

    CHECK(max_abs_diff(net3.features(p3, clip.data()), net2.features(p2, frame.ptr())) < 1e-10);
    CHECK(max_abs_diff(net3.logits(p3, clip.data()), net2.logits(p2, frame.ptr())) < 1e-10);
}

TEST_CASE("flow-stream inflation averages then replicates first-layer channels") {
    NetSpec rgb = NetSpec::i3d_mini(3).twin_2d();
    NetSpec flow = NetSpec::i3d_mini(2);
    Network<double> n2(rgb), n3(flow);
    auto p2 = n2.init_params(5);
    auto head = n3.init_params(6);
    auto p3 = inflate_params(p2, flow, head, true);
    n3.check_params(p3);
    const auto& w2 = p2.at("conv1.weight").value;
    const auto& w3 = p3.at("conv1.weight").value;
    // o=0, tap (kh,kw)=(1,2), every t and input channel.
    const double mean = (w2.data[0 * 25 + 7] + w2.data[1 * 25 + 7] + w2.data[2 * 25 + 7]) / 3.0;
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 3; ++t) CHECK(w3.data[(c * 3 + t) * 25 + 7] == doctest::Approx(mean / 3.0));
    for (std::size_t i = 0; i < flow.backbone_param_count(); ++i) CHECK(p3.items[i].frozen);
    CHECK_FALSE(p3.at("head.weight").frozen);
}

TEST_CASE("forward: zero head gives 0.5; identical samples give identical scores") {
    Network<double> net(NetSpec::i3d_mini(2));
    auto p = net.init_params(1);
    const std::size_t per = net.spec().input_shape().numel();
    std::mt19937_64 rng(2);
    auto one = random_tensor<double>({1, 2, 16, 56, 56}, rng);
    Tensor<double> batch({3, 2, 16, 56, 56});
    for (int i = 0; i < 3; ++i) std::copy(one.data.begin(), one.data.end(), batch.data.begin() + i * per);
    auto scores = net.forward(p, batch);
    CHECK(scores[0] == scores[1]);
    CHECK(scores[1] == scores[2]);
    CHECK(scores[0] > 0.0);
    CHECK(scores[0] < 1.0);
    for (auto& v : p.at("head.weight").value.data) v = 0;
    CHECK(net.forward(p, batch)[0] == 0.5);
}

TEST_CASE("forward: wrong channel count is rejected") {
    Network<double> net(NetSpec::i3d_mini(3));
    auto p = net.init_params(1);
    Tensor<double> batch({1, 2, 16, 56, 56});
    CHECK_THROWS_AS(net.forward(p, batch), Error);
}

TEST_CASE("gradients: finite differences on 2 conv + head") {
    NetSpec s;
    s.in_channels = 4;
    s.frames = 4;
    s.size = 8;
    s.layers.push_back(LayerSpec::make_conv({"c1", 3, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}, true}));
    s.layers.push_back(LayerSpec::make_conv({"c2", 2, {1, 3, 3}, {1, 1, 1}, {0, 1, 1}, true}));
    Network<double> net(s);
    auto p = random_params(net, 21);
    std::mt19937_64 rng(22);
    auto batch = random_tensor<double>({2, 4, 4, 8, 8}, rng);
    CHECK(max_rel_grad_error(net, p, batch, {0, 1}) < 1e-4);
}

TEST_CASE("gradients: finite differences on conv + conv + pool + mixed + head") {
    Network<double> net(micro_spec());
    auto p = random_params(net, 31);
    std::mt19937_64 rng(32);
    auto batch = random_tensor<double>({2, 2, 4, 8, 8}, rng);
    CHECK(max_rel_grad_error(net, p, batch, {1, 0}) < 1e-4);
}

TEST_CASE("gradients: circular temporal padding") {
    NetSpec s = micro_spec();
    s.temporal_padding = TemporalPadding::Circular;
    Network<double> net(s);
    auto p = random_params(net, 41);
    std::mt19937_64 rng(42);
    auto batch = random_tensor<double>({1, 2, 4, 8, 8}, rng);
    CHECK(max_rel_grad_error(net, p, batch, {1}) < 1e-4);
}

TEST_CASE("gradients: partially frozen backbone") {
    Network<double> net(micro_spec());
    auto p = random_params(net, 51);
    p.set_frozen_prefix(4, true);
    std::mt19937_64 rng(52);
    auto batch = random_tensor<double>({2, 2, 4, 8, 8}, rng);
    Gradients<double> g;
    net.loss_and_gradients(p, batch, {0, 1}, g);
    CHECK(g.count("conv1.weight") == 0);
    CHECK(g.count("conv2.bias") == 0);
    CHECK(g.count("mixed.b0.weight") == 1);
    CHECK(max_rel_grad_error(net, p, batch, {0, 1}) < 1e-4);
}

TEST_CASE("gradients: softmax head") {
    NetSpec s = micro_spec();
    s.head_outputs = 4;
    Network<double> net(s);
    auto p = random_params(net, 61);
    std::mt19937_64 rng(62);
    auto batch = random_tensor<double>({3, 2, 4, 8, 8}, rng);
    CHECK(max_rel_grad_error(net, p, batch, {0, 3, 2}) < 1e-4);
}

TEST_CASE("gradients: frozen backbone yields head tensors only") {
    Network<double> net(micro_spec());
    auto p = net.init_params(3);
    p.set_frozen_prefix(net.spec().backbone_param_count(), true);
    std::mt19937_64 rng(4);
    auto batch = random_tensor<double>({2, 2, 4, 8, 8}, rng);
    Gradients<double> g;
    net.loss_and_gradients(p, batch, {0, 1}, g);
    REQUIRE(g.size() == 2);
    CHECK(g.count("head.weight") == 1);
    CHECK(g.count("head.bias") == 1);
}

TEST_CASE("gradients: a confidently correct batch has a tiny gradient") {
    Network<double> net(micro_spec());
    auto p = random_params(net, 71);
    std::mt19937_64 rng(72);
    auto batch = random_tensor<double>({2, 2, 4, 8, 8}, rng);
    for (auto& v : p.at("head.weight").value.data) v = 0;
    p.at("head.bias").value.data[0] = 20.0;  // sigmoid(20) ~ 1 - 2e-9
    Gradients<double> g;
    net.loss_and_gradients(p, batch, {1, 1}, g);
    double sq = 0;
    for (const auto& [name, t] : g)
        for (double v : t.data) sq += v * v;
    CHECK(std::sqrt(sq) < 1e-3);
}

TEST_CASE("net spec: json roundtrip and invalid arithmetic") {
    NetSpec s = NetSpec::i3d_mini(2, 56, 16);
    s.temporal_padding = TemporalPadding::Circular;
    NetSpec r = NetSpec::from_json(s.to_json());
    CHECK(r.to_json() == s.to_json());
    CHECK(r.param_shapes() == s.param_shapes());
    auto shapes = s.shapes();
    CHECK(shapes.back().c == 32);
    CHECK(shapes.back().t == 8);
    CHECK(shapes.back().h == 7);
    NetSpec tiny = NetSpec::i3d_mini(3, 4, 16);
    CHECK_THROWS_AS(tiny.shapes(), Error);
    CHECK(NetSpec::i3d_mini(3, 224, 16).shapes().back().h == 28);
}

TEST_CASE("fusion is the mean, symmetric, and stays inside (0,1)") {
    CHECK(fuse_two_stream(0.8, 0.6) == doctest::Approx(0.7));
    CHECK(fuse_two_stream(0.3, 0.3) == 0.3);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double a = uniform(rng, 1e-12, 1 - 1e-12), b = uniform(rng, 1e-12, 1 - 1e-12);
        CHECK(fuse_two_stream(a, b) == fuse_two_stream(b, a));
        CHECK(fuse_two_stream(a, b) > 0.0);
        CHECK(fuse_two_stream(a, b) < 1.0);
    }
}

TEST_CASE("checkpoint: roundtrip, empty set, corrupt magic, wrong version, truncation") {
    hhm::test::TempDir dir("ckpt");
    Network<float> net(NetSpec::i3d_mini(3));
    auto p = net.init_params(8);
    p.set_frozen_prefix(5, true);
    save_params(p, dir / "a.swnet");
    auto r = load_params(dir / "a.swnet");
    REQUIRE(r.items.size() == p.items.size());
    for (std::size_t i = 0; i < p.items.size(); ++i) {
        CHECK(r.items[i].name == p.items[i].name);
        CHECK(r.items[i].frozen == p.items[i].frozen);
        CHECK(r.items[i].value == p.items[i].value);
    }

    save_params(ModelParams<float>{}, dir / "empty.swnet");
    CHECK(load_params(dir / "empty.swnet").items.empty());

    auto bytes = [&](const std::filesystem::path& f) {
        std::ifstream in(f, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), {});
    };
    auto put = [&](const std::filesystem::path& f, const std::string& s) {
        std::ofstream(f, std::ios::binary) << s;
    };
    std::string good = bytes(dir / "a.swnet");
    std::string bad = good;
    bad[0] = 'X';
    put(dir / "magic.swnet", bad);
    CHECK_THROWS_WITH_AS(load_params(dir / "magic.swnet"), doctest::Contains("magic"), Error);
    bad = good;
    bad[5] = 9;
    put(dir / "ver.swnet", bad);
    CHECK_THROWS_WITH_AS(load_params(dir / "ver.swnet"), doctest::Contains("version"), Error);
    put(dir / "trunc.swnet", good.substr(0, good.size() - 7));
    CHECK_THROWS_WITH_AS(load_params(dir / "trunc.swnet"), doctest::Contains("truncated"), Error);
}
