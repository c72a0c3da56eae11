// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations shared by the unit tests and the acceptance run.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "hhm/flow.hpp"
#include "hhm/net.hpp"
#include "test_util.hpp"

namespace hhm::test {

// Direct summation over every output position and kernel tap.
inline Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                          std::array<int, 3> s, std::array<int, 3> p) {
    const int N = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
    const int O = w.dim(0), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
    const int To = (T + 2 * p[0] - kt) / s[0] + 1, Ho = (H + 2 * p[1] - kh) / s[1] + 1,
              Wo = (W + 2 * p[2] - kw) / s[2] + 1;
    Tensor<double> y({N, O, To, Ho, Wo});
    auto X = [&](int n, int c, int t, int h, int ww) {
        if (t < 0 || t >= T || h < 0 || h >= H || ww < 0 || ww >= W) return 0.0;
        return x.data[(((std::size_t(n) * C + c) * T + t) * H + h) * W + ww];
    };
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
            for (int t = 0; t < To; ++t)
                for (int h = 0; h < Ho; ++h)
                    for (int ww = 0; ww < Wo; ++ww) {
                        double acc = b.data[o];
                        for (int c = 0; c < C; ++c)
                            for (int a = 0; a < kt; ++a)
                                for (int i = 0; i < kh; ++i)
                                    for (int j = 0; j < kw; ++j)
                                        acc += w.data[(((std::size_t(o) * C + c) * kt + a) * kh + i) * kw + j] *
                                               X(n, c, t * s[0] - p[0] + a, h * s[1] - p[1] + i, ww * s[2] - p[2] + j);
                        y.data[(((std::size_t(n) * O + o) * To + t) * Ho + h) * Wo + ww] = acc;
                    }
    return y;
}

inline NetSpec micro_spec() {
    NetSpec s;
    s.in_channels = 2;
    s.frames = 4;
    s.size = 8;
    s.layers.push_back(LayerSpec::make_conv({"conv1", 3, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, true}));
    s.layers.push_back(LayerSpec::make_conv({"conv2", 4, {2, 3, 3}, {1, 2, 2}, {0, 1, 1}, true}));
    s.layers.push_back(LayerSpec::make_pool({{1, 2, 2}, {1, 1, 1}, {0, 0, 0}}));
    s.layers.push_back(LayerSpec::make_mixed({"mixed", 2, 2, 3, 1, 2, 2, 3}));
    return s;
}

// Randomizes biases too so few units sit exactly at a ReLU kink.
inline ModelParams<double> random_params(const Network<double>& net, std::uint64_t seed) {
    auto p = net.init_params(seed);
    std::mt19937_64 rng(seed);
    for (auto& item : p.items)
        for (auto& v : item.value.data) v = uniform(rng, -0.5, 0.5) + (item.value.rank() == 1 ? 0.1 : 0.0);
    return p;
}

inline double max_rel_grad_error(const Network<double>& net, ModelParams<double> params, const Tensor<double>& batch,
                                 const std::vector<int>& labels) {
    Gradients<double> grads;
    net.loss_and_gradients(params, batch, labels, grads);
    const double h = 1e-5;
    double worst = 0;
    for (auto& item : params.items) {
        if (item.frozen) continue;
        const auto& g = grads.at(item.name);
        for (std::size_t i = 0; i < item.value.numel(); ++i) {
            const double orig = item.value.data[i];
            item.value.data[i] = orig + h;
            const double lp = net.loss(params, batch, labels);
            item.value.data[i] = orig - h;
            const double lm = net.loss(params, batch, labels);
            item.value.data[i] = orig;
            const double num = (lp - lm) / (2 * h);
            const double a = g.data[i];
            worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-6}));
        }
    }
    return worst;
}

inline constexpr double kPi = 3.14159265358979323846;

// Sum of random sinusoids with integer frequencies: smooth and periodic on an
// n x n grid, so a shifted copy is exact everywhere.
struct Texture {
    struct Wave {
        int fx, fy;
        double amp, phase;
    };
    std::vector<Wave> waves;
    int n;

    Texture(int size, std::uint64_t seed) : n(size) {
        std::mt19937_64 rng(seed);
        for (int k = 0; k < 12; ++k)
            waves.push_back({1 + static_cast<int>(rng() % 6), static_cast<int>(rng() % 7) - 3, uniform(rng, 0.3, 1.0),
                             uniform(rng, 0, 2 * kPi)});
    }

    Frame render(double dx, double dy) const {
        Frame f(n, n, 1);
        std::vector<double> v(std::size_t(n) * n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double s = 0;
                for (const Wave& w : waves)
                    s += w.amp * std::sin(2 * kPi * (w.fx * (x - dx) + w.fy * (y - dy)) / n + w.phase);
                v[std::size_t(y) * n + x] = s;
            }
        // Fixed normalization so every render shares one intensity map.
        for (std::size_t i = 0; i < v.size(); ++i) f.data[i] = static_cast<float>(0.5 + v[i] / 12.0);
        return f;
    }
};

inline double central_epe(const FlowField& f, double gx, double gy) {
    const int mx = f.width / 10, my = f.height / 10;
    double sum = 0;
    int count = 0;
    for (int y = my; y < f.height - my; ++y)
        for (int x = mx; x < f.width - mx; ++x) {
            const std::size_t i = std::size_t(y) * f.width + x;
            sum += std::hypot(f.u[i] - gx, f.v[i] - gy);
            ++count;
        }
    return sum / count;
}

}  // namespace hhm::test
