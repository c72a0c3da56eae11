// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/flow.hpp"

#include <fmt/core.h>

#include <cmath>
#include <limits>

namespace hhm {

namespace {

using Plane = std::vector<float>;

struct Image {
    int w = 0, h = 0;
    Plane px;
    float at(int x, int y) const { return px[std::size_t(y) * w + x]; }
};

Image gaussian_blur(const Image& in, double sigma) {
    if (sigma <= 0) return in;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> k(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
    for (float& x : k) x = static_cast<float>(x / sum);
    Image tmp = in, out = in;
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            float s = 0;
            for (int i = -radius; i <= radius; ++i) s += k[i + radius] * in.at(std::clamp(x + i, 0, in.w - 1), y);
            tmp.px[std::size_t(y) * in.w + x] = s;
        }
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            float s = 0;
            for (int i = -radius; i <= radius; ++i) s += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, in.h - 1));
            out.px[std::size_t(y) * in.w + x] = s;
        }
    return out;
}

// Bilinear lookup with replicated borders.
inline float sample(const Image& img, float x, float y) {
    x = std::clamp(x, 0.0f, float(img.w - 1));
    y = std::clamp(y, 0.0f, float(img.h - 1));
    const int x0 = std::min(static_cast<int>(x), img.w - 1), y0 = std::min(static_cast<int>(y), img.h - 1);
    const int x1 = std::min(x0 + 1, img.w - 1), y1 = std::min(y0 + 1, img.h - 1);
    const float fx = x - x0, fy = y - y0;
    const float a = img.at(x0, y0), b = img.at(x1, y0), c = img.at(x0, y1), d = img.at(x1, y1);
    return (a + (b - a) * fx) * (1 - fy) + (c + (d - c) * fx) * fy;
}

Image resample(const Image& in, int w, int h) {
    Image out{w, h, Plane(std::size_t(w) * h)};
    const float sx = float(in.w) / w, sy = float(in.h) / h;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.px[std::size_t(y) * w + x] = sample(in, (x + 0.5f) * sx - 0.5f, (y + 0.5f) * sy - 0.5f);
    return out;
}

void centered_gradient(const Image& I, Plane& gx, Plane& gy) {
    const int w = I.w, h = I.h;
    gx.assign(std::size_t(w) * h, 0.0f);
    gy.assign(std::size_t(w) * h, 0.0f);
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            gx[std::size_t(y) * w + x] = 0.5f * (I.at(xp, y) - I.at(xm, y));
            gy[std::size_t(y) * w + x] = 0.5f * (I.at(x, yp) - I.at(x, ym));
        }
    }
}

// Forward differences, zero on the last column/row.
void forward_gradient(const Plane& u, int w, int h, Plane& ux, Plane& uy) {
    for (int y = 0; y < h; ++y) {
        const std::size_t r = std::size_t(y) * w;
        for (int x = 0; x < w - 1; ++x) ux[r + x] = u[r + x + 1] - u[r + x];
        ux[r + w - 1] = 0.0f;
        if (y < h - 1)
            for (int x = 0; x < w; ++x) uy[r + x] = u[r + w + x] - u[r + x];
        else
            for (int x = 0; x < w; ++x) uy[r + x] = 0.0f;
    }
}

// Negative adjoint of forward_gradient.
void divergence(const Plane& p1, const Plane& p2, int w, int h, Plane& div) {
    for (int y = 0; y < h; ++y) {
        const std::size_t r = std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            float d1 = x == 0 ? p1[r] : (x == w - 1 ? -p1[r + x - 1] : p1[r + x] - p1[r + x - 1]);
            float d2 = y == 0 ? p2[r + x] : (y == h - 1 ? -p2[r - w + x] : p2[r + x] - p2[r - w + x]);
            div[r + x] = d1 + d2;
        }
    }
}

struct LevelSolver {
    const TvL1Params& p;
    FlowTrace* trace;
    int level;

    // lambda*|rho(v)| + |u-v|^2/(2 theta) for one pixel of one linearization.
    double fit(std::size_t i, float a1, float a2, float b1, float b2, const Plane& rho_c, const Plane& gx,
               const Plane& gy) const {
        const double rho = double(rho_c[i]) + double(gx[i]) * b1 + double(gy[i]) * b2;
        const double d1 = double(a1) - b1, d2 = double(a2) - b2;
        return p.lambda * std::abs(rho) + (d1 * d1 + d2 * d2) / (2.0 * p.theta);
    }

    static double total_variation(const Plane& ux, const Plane& uy) {
        double t = 0;
        for (std::size_t i = 0; i < ux.size(); ++i) t += std::hypot(double(ux[i]), double(uy[i]));
        return t;
    }

    static double coupling(const Plane& u, const Plane& v) {
        double c = 0;
        for (std::size_t i = 0; i < u.size(); ++i) c += (double(u[i]) - v[i]) * (double(u[i]) - v[i]);
        return c;
    }

    void solve(const Image& I0, const Image& I1, Plane& u1, Plane& u2) const {
        const int w = I0.w, h = I0.h;
        const std::size_t n = std::size_t(w) * h;
        const float l_t = static_cast<float>(p.lambda * p.theta);
        const float theta = static_cast<float>(p.theta);
        const float taut = static_cast<float>(p.tau / p.theta);
        const double inv2t = 1.0 / (2.0 * p.theta);
        Plane I1x, I1y;
        centered_gradient(I1, I1x, I1y);
        Image gx_img{w, h, I1x}, gy_img{w, h, I1y};

        Plane I1w(n), I1wx(n), I1wy(n), grad(n), rho_c(n), v1(n), v2(n);
        Plane p11(n, 0.0f), p12(n, 0.0f), p21(n, 0.0f), p22(n, 0.0f);
        Plane div1(n), div2(n), u1x(n), u1y(n), u2x(n), u2y(n);
        Plane c1(n), c2(n), c1x(n), c1y(n), c2x(n), c2y(n);

        for (int warp = 0; warp < p.warps; ++warp) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = std::size_t(y) * w + x;
                    const float wx = x + u1[i], wy = y + u2[i];
                    I1w[i] = sample(I1, wx, wy);
                    I1wx[i] = sample(gx_img, wx, wy);
                    I1wy[i] = sample(gy_img, wx, wy);
                }
            for (std::size_t i = 0; i < n; ++i) {
                grad[i] = I1wx[i] * I1wx[i] + I1wy[i] * I1wy[i];
                rho_c[i] = I1w[i] - I1wx[i] * u1[i] - I1wy[i] * u2[i] - I0.px[i];
            }
            v1 = u1;
            v2 = u2;
            forward_gradient(u1, w, h, u1x, u1y);
            forward_gradient(u2, w, h, u2x, u2y);
            double tv1 = total_variation(u1x, u1y), tv2 = total_variation(u2x, u2y);
            auto energy = [&] {
                double e = tv1 + tv2;
                for (std::size_t i = 0; i < n; ++i) e += fit(i, u1[i], u2[i], v1[i], v2[i], rho_c, I1wx, I1wy);
                return e;
            };
            FlowTrace::Stage* stage = nullptr;
            if (trace) {
                trace->stages.push_back({level, warp, {}});
                stage = &trace->stages.back();
                stage->energy.push_back(energy());
            }

            for (int iter = 0; iter < p.iterations; ++iter) {
                // Pointwise minimisation of the linearised L1 data term plus coupling.
                for (std::size_t i = 0; i < n; ++i) {
                    const float rho = rho_c[i] + I1wx[i] * u1[i] + I1wy[i] * u2[i];
                    float d1, d2;
                    if (rho < -l_t * grad[i]) {
                        d1 = l_t * I1wx[i];
                        d2 = l_t * I1wy[i];
                    } else if (rho > l_t * grad[i]) {
                        d1 = -l_t * I1wx[i];
                        d2 = -l_t * I1wy[i];
                    } else if (grad[i] < 1e-10f) {
                        d1 = d2 = 0.0f;
                    } else {
                        const float fi = -rho / grad[i];
                        d1 = fi * I1wx[i];
                        d2 = fi * I1wy[i];
                    }
                    const float a1 = u1[i] + d1, a2 = u2[i] + d2;
                    if (fit(i, u1[i], u2[i], a1, a2, rho_c, I1wx, I1wy) <=
                        fit(i, u1[i], u2[i], v1[i], v2[i], rho_c, I1wx, I1wy)) {
                        v1[i] = a1;
                        v2[i] = a2;
                    }
                }
                // One Chambolle step for each ROF subproblem; the primal candidate
                // replaces u only when it does not raise TV + coupling.
                divergence(p11, p12, w, h, div1);
                divergence(p21, p22, w, h, div2);
                double change = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    c1[i] = v1[i] + theta * div1[i];
                    c2[i] = v2[i] + theta * div2[i];
                    change += double(c1[i] - u1[i]) * (c1[i] - u1[i]) + double(c2[i] - u2[i]) * (c2[i] - u2[i]);
                }
                change /= double(n);
                forward_gradient(c1, w, h, c1x, c1y);
                forward_gradient(c2, w, h, c2x, c2y);
                const double ctv1 = total_variation(c1x, c1y), ctv2 = total_variation(c2x, c2y);
                if (ctv1 + inv2t * coupling(c1, v1) <= tv1 + inv2t * coupling(u1, v1)) {
                    u1.swap(c1);
                    tv1 = ctv1;
                }
                if (ctv2 + inv2t * coupling(c2, v2) <= tv2 + inv2t * coupling(u2, v2)) {
                    u2.swap(c2);
                    tv2 = ctv2;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const float ng1 = 1.0f + taut * std::sqrt(c1x[i] * c1x[i] + c1y[i] * c1y[i]);
                    const float ng2 = 1.0f + taut * std::sqrt(c2x[i] * c2x[i] + c2y[i] * c2y[i]);
                    p11[i] = (p11[i] + taut * c1x[i]) / ng1;
                    p12[i] = (p12[i] + taut * c1y[i]) / ng1;
                    p21[i] = (p21[i] + taut * c2x[i]) / ng2;
                    p22[i] = (p22[i] + taut * c2y[i]) / ng2;
                }
                if (stage) stage->energy.push_back(energy());
                if (change < p.epsilon * p.epsilon) break;
            }
        }
    }
};

Image to_image(const Frame& f, double scale, bool zero_mean) {
    Frame g = to_grayscale(f);
    double mean = 0;
    if (zero_mean && !g.data.empty()) {
        for (float x : g.data) mean += x;
        mean /= double(g.data.size());
    }
    Image img{g.width, g.height, Plane(g.data.size())};
    for (std::size_t i = 0; i < g.data.size(); ++i) img.px[i] = static_cast<float>((g.data[i] - mean) * scale);
    return img;
}

}  // namespace

Frame FlowField::to_frame() const {
    Frame f(width, height, 2);
    for (std::size_t i = 0; i < u.size(); ++i) {
        f.data[2 * i] = u[i];
        f.data[2 * i + 1] = v[i];
    }
    return f;
}

FlowField FlowField::from_frame(const Frame& f) {
    if (f.channels != 2) data_error("FlowField::from_frame expects a two-channel frame");
    FlowField out(f.width, f.height);
    for (std::size_t i = 0; i < out.u.size(); ++i) {
        out.u[i] = f.data[2 * i];
        out.v[i] = f.data[2 * i + 1];
    }
    return out;
}

void TvL1Params::validate() const {
    if (!(lambda > 0 && theta > 0 && tau > 0 && epsilon > 0 && intensity_scale > 0))
        config_error("tvl1: lambda, theta, tau, epsilon and intensity_scale must be positive");
    if (tau > 0.25) config_error(fmt::format("tvl1: tau {} exceeds the stability bound 0.25", tau));
    if (warps < 1 || iterations < 1) config_error("tvl1: warps and iterations must be >= 1");
    if (!(level_scale > 0 && level_scale < 1)) config_error("tvl1: level_scale must lie in (0,1)");
    if (min_level_size < 1) config_error("tvl1: min_level_size must be >= 1");
    if (presmooth_sigma < 0) config_error("tvl1: presmooth_sigma must be >= 0");
}

FlowField tvl1_flow(const Frame& I0, const Frame& I1, const TvL1Params& params, FlowTrace* trace) {
    params.validate();
    if (I0.width != I1.width || I0.height != I1.height)
        data_error(fmt::format("tvl1_flow: frame sizes differ ({}x{} vs {}x{})", I0.width, I0.height, I1.width,
                               I1.height));
    if (I0.channels == 2 || I1.channels == 2) data_error("tvl1_flow: expected intensity frames, got flow");

    std::vector<Image> pyr0{gaussian_blur(to_image(I0, params.intensity_scale, params.zero_mean), params.presmooth_sigma)};
    std::vector<Image> pyr1{gaussian_blur(to_image(I1, params.intensity_scale, params.zero_mean), params.presmooth_sigma)};
    const double down_sigma = 0.6 * std::sqrt(1.0 / (params.level_scale * params.level_scale) - 1.0);
    for (;;) {
        const Image& last = pyr0.back();
        const int w = static_cast<int>(last.w * params.level_scale + 0.5);
        const int h = static_cast<int>(last.h * params.level_scale + 0.5);
        if (std::min(w, h) < params.min_level_size) break;
        pyr0.push_back(resample(gaussian_blur(pyr0.back(), down_sigma), w, h));
        pyr1.push_back(resample(gaussian_blur(pyr1.back(), down_sigma), w, h));
    }

    const int levels = static_cast<int>(pyr0.size());
    Plane u1(pyr0.back().px.size(), 0.0f), u2(pyr0.back().px.size(), 0.0f);
    for (int level = levels - 1; level >= 0; --level) {
        const Image& a = pyr0[level];
        LevelSolver{params, trace, level}.solve(a, pyr1[level], u1, u2);
        if (level == 0) break;
        const Image& fine = pyr0[level - 1];
        Image cu{a.w, a.h, u1}, cv{a.w, a.h, u2};
        Image fu = resample(cu, fine.w, fine.h), fv = resample(cv, fine.w, fine.h);
        const float sx = float(fine.w) / a.w, sy = float(fine.h) / a.h;
        for (float& x : fu.px) x *= sx;
        for (float& x : fv.px) x *= sy;
        u1 = std::move(fu.px);
        u2 = std::move(fv.px);
    }

    FlowField out(I0.width, I0.height);
    out.u = std::move(u1);
    out.v = std::move(u2);
    for (std::size_t i = 0; i < out.u.size(); ++i)
        if (!std::isfinite(out.u[i]) || !std::isfinite(out.v[i])) data_error("tvl1_flow produced a non-finite value");
    return out;
}

FrameSequence flow_sequence(const FrameSequence& seq, const TvL1Params& params, double cap) {
    if (seq.size() < 2) data_error(fmt::format("flow_sequence: '{}' needs at least 2 frames", seq.video_id));
    if (!(cap > 0)) config_error("flow_sequence: cap must be positive");
    params.validate();
    FrameSequence out;
    out.fps = seq.fps;
    out.video_id = seq.video_id;
    out.date_tag = seq.date_tag;
    out.frames.resize(seq.size());
    parallel_for(seq.size() - 1, [&](std::size_t i) {
        Frame f = tvl1_flow(seq.frames[i], seq.frames[i + 1], params).to_frame();
        const float c = static_cast<float>(cap);
        for (float& x : f.data) x = std::clamp(x, -c, c) / c;
        out.frames[i] = std::move(f);
    });
    out.frames.back() = out.frames[seq.size() - 2];
    return out;
}

}  // namespace hhm
