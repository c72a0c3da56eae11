// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/net.hpp"

#include <fmt/core.h>

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <algorithm>
#include <fstream>
#include <random>

#include "hhm/clips.hpp"
#include "json.hpp"

namespace hhm {

std::string dims_string(const std::vector<int>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "x" : "") + std::to_string(dims[i]);
    return s + "]";
}

// ---------------------------------------------------------------------------
// NetSpec

NetSpec NetSpec::i3d_mini(int in_channels, int size, int frames) {
    NetSpec s;
    s.in_channels = in_channels;
    s.size = size;
    s.frames = frames;
    s.layers.push_back(LayerSpec::make_conv({"conv1", 8, {3, 5, 5}, {1, 2, 2}, {1, 2, 2}, true}));
    s.layers.push_back(LayerSpec::make_pool({{1, 2, 2}, {1, 2, 2}, {0, 0, 0}}));
    s.layers.push_back(LayerSpec::make_mixed({"mixed1", 6, 6, 12, 2, 3, 3, 3}));
    s.layers.push_back(LayerSpec::make_pool({{2, 2, 2}, {2, 2, 2}, {0, 0, 0}}));
    s.layers.push_back(LayerSpec::make_mixed({"mixed2", 8, 8, 16, 2, 4, 4, 3}));
    s.head_outputs = 1;
    return s;
}

NetSpec NetSpec::twin_2d() const {
    NetSpec s = *this;
    s.frames = 1;
    s.temporal_padding = TemporalPadding::Zero;
    for (LayerSpec& l : s.layers) {
        switch (l.kind) {
            case LayerSpec::Kind::Conv:
                l.conv.kernel[0] = l.conv.stride[0] = 1;
                l.conv.pad[0] = 0;
                break;
            case LayerSpec::Kind::MaxPool:
                l.pool.kernel[0] = l.pool.stride[0] = 1;
                l.pool.pad[0] = 0;
                break;
            case LayerSpec::Kind::Mixed: l.mixed.kt = 1; break;
        }
    }
    return s;
}

namespace {

int out_extent(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

void check_extent(int in, int k, int s, int p, const std::string& what) {
    if (k < 1 || s < 1 || p < 0 || in + 2 * p < k)
        model_error(fmt::format("{}: kernel {} stride {} pad {} does not fit extent {}", what, k, s, p, in));
}

}  // namespace

std::vector<NetSpec::Shape> NetSpec::shapes() const {
    if (in_channels < 1 || frames < 1 || size < 1) model_error("net spec: input extents must be positive");
    if (head_outputs < 1) model_error("net spec: head needs at least one output");
    std::vector<Shape> out;
    Shape cur = input_shape();
    for (const LayerSpec& l : layers) {
        switch (l.kind) {
            case LayerSpec::Kind::Conv: {
                const ConvSpec& c = l.conv;
                if (c.out_channels < 1) model_error(fmt::format("{}: out_channels must be positive", c.name));
                const int ext[3] = {cur.t, cur.h, cur.w};
                int o[3];
                for (int d = 0; d < 3; ++d) {
                    check_extent(ext[d], c.kernel[d], c.stride[d], c.pad[d], c.name);
                    o[d] = out_extent(ext[d], c.kernel[d], c.stride[d], c.pad[d]);
                }
                if (temporal_padding == TemporalPadding::Circular && c.pad[0] > cur.t)
                    model_error(fmt::format("{}: circular temporal pad exceeds {} frames", c.name, cur.t));
                cur = {c.out_channels, o[0], o[1], o[2]};
                break;
            }
            case LayerSpec::Kind::MaxPool: {
                const PoolSpec& p = l.pool;
                const int ext[3] = {cur.t, cur.h, cur.w};
                int o[3];
                for (int d = 0; d < 3; ++d) {
                    check_extent(ext[d], p.kernel[d], p.stride[d], p.pad[d], "maxpool");
                    if (p.pad[d] >= p.kernel[d]) model_error("maxpool: padding must be smaller than the kernel");
                    o[d] = out_extent(ext[d], p.kernel[d], p.stride[d], p.pad[d]);
                }
                cur = {cur.c, o[0], o[1], o[2]};
                break;
            }
            case LayerSpec::Kind::Mixed: {
                const MixedSpec& m = l.mixed;
                if (m.kt < 1 || m.kt % 2 == 0) model_error(fmt::format("{}: temporal kernel must be odd", m.name));
                for (int v : {m.b0, m.b1_reduce, m.b1, m.b2_reduce, m.b2, m.b3})
                    if (v < 1) model_error(fmt::format("{}: branch widths must be positive", m.name));
                cur = {m.out_channels(), cur.t, cur.h, cur.w};
                break;
            }
        }
        if (cur.t < 1 || cur.h < 1 || cur.w < 1) model_error("net spec: layer produces an empty activation");
        out.push_back(cur);
    }
    return out;
}

int NetSpec::feature_channels() const {
    auto s = shapes();
    return s.empty() ? in_channels : s.back().c;
}

std::vector<std::pair<std::string, std::vector<int>>> NetSpec::param_shapes() const {
    std::vector<std::pair<std::string, std::vector<int>>> out;
    int c = in_channels;
    auto conv = [&](const std::string& name, int ci, int co, int kt, int kh, int kw) {
        out.push_back({name + ".weight", {co, ci, kt, kh, kw}});
        out.push_back({name + ".bias", {co}});
    };
    for (const LayerSpec& l : layers) {
        switch (l.kind) {
            case LayerSpec::Kind::Conv:
                conv(l.conv.name, c, l.conv.out_channels, l.conv.kernel[0], l.conv.kernel[1], l.conv.kernel[2]);
                c = l.conv.out_channels;
                break;
            case LayerSpec::Kind::MaxPool: break;
            case LayerSpec::Kind::Mixed: {
                const MixedSpec& m = l.mixed;
                conv(m.name + ".b0", c, m.b0, 1, 1, 1);
                conv(m.name + ".b1a", c, m.b1_reduce, 1, 1, 1);
                conv(m.name + ".b1b", m.b1_reduce, m.b1, m.kt, 3, 3);
                conv(m.name + ".b2a", c, m.b2_reduce, 1, 1, 1);
                conv(m.name + ".b2b", m.b2_reduce, m.b2, m.kt, 3, 3);
                conv(m.name + ".b3", c, m.b3, 1, 1, 1);
                c = m.out_channels();
                break;
            }
        }
    }
    conv("head", c, head_outputs, 1, 1, 1);
    return out;
}

std::size_t NetSpec::backbone_param_count() const { return param_shapes().size() - 2; }

namespace {

nlohmann::json arr3(const std::array<int, 3>& a) { return nlohmann::json::array({a[0], a[1], a[2]}); }
std::array<int, 3> get3(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

}  // namespace

std::string NetSpec::to_json() const {
    nlohmann::json j;
    j["in_channels"] = in_channels;
    j["frames"] = frames;
    j["size"] = size;
    j["head_outputs"] = head_outputs;
    j["temporal_padding"] = temporal_padding == TemporalPadding::Circular ? "circular" : "zero";
    nlohmann::json ls = nlohmann::json::array();
    for (const LayerSpec& l : layers) {
        switch (l.kind) {
            case LayerSpec::Kind::Conv:
                ls.push_back({{"type", "conv"},
                              {"name", l.conv.name},
                              {"out_channels", l.conv.out_channels},
                              {"kernel", arr3(l.conv.kernel)},
                              {"stride", arr3(l.conv.stride)},
                              {"pad", arr3(l.conv.pad)},
                              {"relu", l.conv.relu}});
                break;
            case LayerSpec::Kind::MaxPool:
                ls.push_back({{"type", "maxpool"},
                              {"kernel", arr3(l.pool.kernel)},
                              {"stride", arr3(l.pool.stride)},
                              {"pad", arr3(l.pool.pad)}});
                break;
            case LayerSpec::Kind::Mixed: {
                const MixedSpec& m = l.mixed;
                ls.push_back({{"type", "mixed"},    {"name", m.name}, {"b0", m.b0}, {"b1_reduce", m.b1_reduce},
                              {"b1", m.b1},         {"b2_reduce", m.b2_reduce},   {"b2", m.b2},
                              {"b3", m.b3},         {"kt", m.kt}});
                break;
            }
        }
    }
    j["layers"] = ls;
    return j.dump(2);
}

NetSpec NetSpec::from_json(const std::string& text) {
    NetSpec s;
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        s.in_channels = j.at("in_channels").get<int>();
        s.frames = j.at("frames").get<int>();
        s.size = j.at("size").get<int>();
        s.head_outputs = j.value("head_outputs", 1);
        s.temporal_padding = j.value("temporal_padding", std::string("zero")) == "circular" ? TemporalPadding::Circular
                                                                                           : TemporalPadding::Zero;
        for (const auto& l : j.at("layers")) {
            const std::string type = l.at("type").get<std::string>();
            if (type == "conv") {
                s.layers.push_back(LayerSpec::make_conv({l.at("name").get<std::string>(), l.at("out_channels").get<int>(),
                                                         get3(l.at("kernel")), get3(l.at("stride")), get3(l.at("pad")),
                                                         l.value("relu", true)}));
            } else if (type == "maxpool") {
                s.layers.push_back(LayerSpec::make_pool({get3(l.at("kernel")), get3(l.at("stride")), get3(l.at("pad"))}));
            } else if (type == "mixed") {
                s.layers.push_back(LayerSpec::make_mixed({l.at("name").get<std::string>(), l.at("b0").get<int>(),
                                                          l.at("b1_reduce").get<int>(), l.at("b1").get<int>(),
                                                          l.at("b2_reduce").get<int>(), l.at("b2").get<int>(),
                                                          l.at("b3").get<int>(), l.value("kt", 3)}));
            } else {
                model_error(fmt::format("net spec: unknown layer type '{}'", type));
            }
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        model_error(fmt::format("net spec: {}", e.what()));
    }
    s.shapes();
    return s;
}

void NetSpec::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) model_error(fmt::format("cannot write {}", path.string()));
    out << to_json() << '\n';
}

NetSpec NetSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) model_error(fmt::format("cannot open net spec {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

// ---------------------------------------------------------------------------
// ModelParams

template <typename T>
Param<T>* ModelParams<T>::find(const std::string& name) {
    for (auto& p : items)
        if (p.name == name) return &p;
    return nullptr;
}

template <typename T>
const Param<T>* ModelParams<T>::find(const std::string& name) const {
    for (const auto& p : items)
        if (p.name == name) return &p;
    return nullptr;
}

template <typename T>
Param<T>& ModelParams<T>::at(const std::string& name) {
    if (auto* p = find(name)) return *p;
    model_error(fmt::format("no parameter named '{}'", name));
}

template <typename T>
const Param<T>& ModelParams<T>::at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    model_error(fmt::format("no parameter named '{}'", name));
}

template struct ModelParams<float>;
template struct ModelParams<double>;

// ---------------------------------------------------------------------------
// Kernels

namespace {

using Shape = NetSpec::Shape;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const RowMat<T>>;

struct ConvGeom {
    Shape in, out;
    std::array<int, 3> k, s, p;
    bool circular = false;
    bool relu = true;

    int rows() const { return in.c * k[0] * k[1] * k[2]; }
    int cols() const { return out.t * out.h * out.w; }
    bool pointwise() const {
        return k == std::array<int, 3>{1, 1, 1} && s == std::array<int, 3>{1, 1, 1} && p == std::array<int, 3>{0, 0, 0};
    }
};

struct PoolGeom {
    Shape in, out;
    std::array<int, 3> k, s, p;
};

ConvGeom conv_geom(Shape in, int out_c, std::array<int, 3> k, std::array<int, 3> s, std::array<int, 3> p,
                   bool circular, bool relu) {
    ConvGeom g{in, {out_c, out_extent(in.t, k[0], s[0], p[0]), out_extent(in.h, k[1], s[1], p[1]),
                    out_extent(in.w, k[2], s[2], p[2])},
               k, s, p, circular, relu};
    return g;
}

PoolGeom pool_geom(Shape in, std::array<int, 3> k, std::array<int, 3> s, std::array<int, 3> p) {
    return {in, {in.c, out_extent(in.t, k[0], s[0], p[0]), out_extent(in.h, k[1], s[1], p[1]),
                 out_extent(in.w, k[2], s[2], p[2])},
            k, s, p};
}

// Maps output temporal position + kernel offset to an input frame, or -1 for padding.
inline int temporal_index(const ConvGeom& g, int to, int a) {
    int ti = to * g.s[0] - g.p[0] + a;
    if (g.circular) return ((ti % g.in.t) + g.in.t) % g.in.t;
    return (ti < 0 || ti >= g.in.t) ? -1 : ti;
}

template <typename T>
void im2col(const ConvGeom& g, const T* in, T* col) {
    const int P = g.cols();
    const std::size_t plane = std::size_t(g.in.h) * g.in.w;
    const std::size_t vol = plane * g.in.t;
    int r = 0;
    for (int ci = 0; ci < g.in.c; ++ci)
        for (int a = 0; a < g.k[0]; ++a)
            for (int b = 0; b < g.k[1]; ++b)
                for (int c = 0; c < g.k[2]; ++c, ++r) {
                    T* dst = col + std::size_t(r) * P;
                    for (int to = 0; to < g.out.t; ++to) {
                        const int ti = temporal_index(g, to, a);
                        for (int ho = 0; ho < g.out.h; ++ho) {
                            const int hi = ho * g.s[1] - g.p[1] + b;
                            T* row = dst + (std::size_t(to) * g.out.h + ho) * g.out.w;
                            if (ti < 0 || hi < 0 || hi >= g.in.h) {
                                std::fill(row, row + g.out.w, T(0));
                                continue;
                            }
                            const T* src = in + ci * vol + ti * plane + std::size_t(hi) * g.in.w;
                            for (int wo = 0; wo < g.out.w; ++wo) {
                                const int wi = wo * g.s[2] - g.p[2] + c;
                                row[wo] = (wi < 0 || wi >= g.in.w) ? T(0) : src[wi];
                            }
                        }
                    }
                }
}

template <typename T>
void col2im(const ConvGeom& g, const T* col, T* din) {
    const int P = g.cols();
    const std::size_t plane = std::size_t(g.in.h) * g.in.w;
    const std::size_t vol = plane * g.in.t;
    int r = 0;
    for (int ci = 0; ci < g.in.c; ++ci)
        for (int a = 0; a < g.k[0]; ++a)
            for (int b = 0; b < g.k[1]; ++b)
                for (int c = 0; c < g.k[2]; ++c, ++r) {
                    const T* src = col + std::size_t(r) * P;
                    for (int to = 0; to < g.out.t; ++to) {
                        const int ti = temporal_index(g, to, a);
                        if (ti < 0) continue;
                        for (int ho = 0; ho < g.out.h; ++ho) {
                            const int hi = ho * g.s[1] - g.p[1] + b;
                            if (hi < 0 || hi >= g.in.h) continue;
                            const T* row = src + (std::size_t(to) * g.out.h + ho) * g.out.w;
                            T* dst = din + ci * vol + ti * plane + std::size_t(hi) * g.in.w;
                            for (int wo = 0; wo < g.out.w; ++wo) {
                                const int wi = wo * g.s[2] - g.p[2] + c;
                                if (wi >= 0 && wi < g.in.w) dst[wi] += row[wo];
                            }
                        }
                    }
                }
}

template <typename T>
void conv_forward(const ConvGeom& g, const T* w, const T* bias, const T* in, T* out, std::vector<T>& scratch) {
    const int K = g.rows(), P = g.cols(), Co = g.out.c;
    const T* colp = in;
    if (!g.pointwise()) {
        scratch.resize(std::size_t(K) * P);
        im2col(g, in, scratch.data());
        colp = scratch.data();
    }
    MatMap<T> O(out, Co, P);
    O.noalias() = CMatMap<T>(w, Co, K) * CMatMap<T>(colp, K, P);
    for (int o = 0; o < Co; ++o) {
        T* row = out + std::size_t(o) * P;
        const T b = bias[o];
        if (g.relu)
            for (int i = 0; i < P; ++i) row[i] = std::max(row[i] + b, T(0));
        else
            for (int i = 0; i < P; ++i) row[i] += b;
    }
}

// `dout` is consumed (masked in place). din may be null.
template <typename T>
void conv_backward(const ConvGeom& g, const T* w, const T* in, const T* out, T* dout, T* dw, T* db, T* din,
                   std::vector<T>& scratch) {
    const int K = g.rows(), P = g.cols(), Co = g.out.c;
    if (g.relu)
        for (std::size_t i = 0; i < std::size_t(Co) * P; ++i)
            if (!(out[i] > T(0))) dout[i] = T(0);
    CMatMap<T> dO(dout, Co, P);
    if (db)
        for (int o = 0; o < Co; ++o) db[o] += dO.row(o).sum();
    const T* colp = in;
    if (!g.pointwise() && (dw || din)) {
        scratch.resize(std::size_t(K) * P);
        if (dw) {
            im2col(g, in, scratch.data());
            colp = scratch.data();
        }
    }
    if (dw) MatMap<T>(dw, Co, K).noalias() += dO * CMatMap<T>(colp, K, P).transpose();
    if (din) {
        if (g.pointwise()) {
            MatMap<T>(din, K, P).noalias() += CMatMap<T>(w, Co, K).transpose() * dO;
        } else {
            MatMap<T>(scratch.data(), K, P).noalias() = CMatMap<T>(w, Co, K).transpose() * dO;
            col2im(g, scratch.data(), din);
        }
    }
}

template <typename T>
void pool_forward(const PoolGeom& g, const T* in, T* out, std::vector<int>* argmax) {
    const std::size_t plane = std::size_t(g.in.h) * g.in.w, vol = plane * g.in.t;
    const std::size_t out_vol = std::size_t(g.out.t) * g.out.h * g.out.w;
    if (argmax) argmax->resize(out_vol * g.out.c);
    for (int c = 0; c < g.in.c; ++c) {
        const T* src = in + c * vol;
        std::size_t o = std::size_t(c) * out_vol;
        for (int to = 0; to < g.out.t; ++to)
            for (int ho = 0; ho < g.out.h; ++ho)
                for (int wo = 0; wo < g.out.w; ++wo, ++o) {
                    T best = -std::numeric_limits<T>::infinity();
                    int best_idx = -1;
                    for (int a = 0; a < g.k[0]; ++a) {
                        const int ti = to * g.s[0] - g.p[0] + a;
                        if (ti < 0 || ti >= g.in.t) continue;
                        for (int b = 0; b < g.k[1]; ++b) {
                            const int hi = ho * g.s[1] - g.p[1] + b;
                            if (hi < 0 || hi >= g.in.h) continue;
                            for (int d = 0; d < g.k[2]; ++d) {
                                const int wi = wo * g.s[2] - g.p[2] + d;
                                if (wi < 0 || wi >= g.in.w) continue;
                                const int idx = static_cast<int>(ti * plane + std::size_t(hi) * g.in.w + wi);
                                if (src[idx] > best) {
                                    best = src[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                    }
                    out[o] = best;
                    if (argmax) (*argmax)[o] = best_idx;
                }
    }
}

template <typename T>
void pool_backward(const PoolGeom& g, const std::vector<int>& argmax, const T* dout, T* din) {
    const std::size_t vol = std::size_t(g.in.t) * g.in.h * g.in.w;
    const std::size_t out_vol = std::size_t(g.out.t) * g.out.h * g.out.w;
    for (int c = 0; c < g.in.c; ++c)
        for (std::size_t o = 0; o < out_vol; ++o) din[c * vol + argmax[c * out_vol + o]] += dout[c * out_vol + o];
}

std::uint64_t next_u64(std::mt19937_64& rng) { return rng(); }

double normal(std::mt19937_64& rng) {
    double u1 = (static_cast<double>(next_u64(rng) >> 11) + 0.5) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64(rng) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

// ---------------------------------------------------------------------------
// Network

namespace {

// Per-layer execution plan derived from a NetSpec.
struct MixedPlan {
    ConvGeom b0, b1a, b1b, b2a, b2b, b3;
    PoolGeom pool;
};

struct LayerPlan {
    LayerSpec::Kind kind;
    Shape in, out;
    ConvGeom conv;
    PoolGeom pool;
    MixedPlan mixed;
    std::size_t first_param = 0;  // index into ModelParams::items
    std::size_t n_params = 0;
};

std::vector<LayerPlan> make_plan(const NetSpec& spec) {
    auto shapes = spec.shapes();
    const bool circ = spec.temporal_padding == TemporalPadding::Circular;
    std::vector<LayerPlan> plan;
    Shape cur = spec.input_shape();
    std::size_t param = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        LayerPlan p;
        p.kind = l.kind;
        p.in = cur;
        p.out = shapes[i];
        p.first_param = param;
        switch (l.kind) {
            case LayerSpec::Kind::Conv:
                p.conv = conv_geom(cur, l.conv.out_channels, l.conv.kernel, l.conv.stride, l.conv.pad, circ, l.conv.relu);
                p.n_params = 2;
                break;
            case LayerSpec::Kind::MaxPool: p.pool = pool_geom(cur, l.pool.kernel, l.pool.stride, l.pool.pad); break;
            case LayerSpec::Kind::Mixed: {
                const MixedSpec& m = l.mixed;
                const std::array<int, 3> one{1, 1, 1}, zero{0, 0, 0}, k3{m.kt, 3, 3}, p3{m.kt / 2, 1, 1};
                MixedPlan& mp = p.mixed;
                mp.b0 = conv_geom(cur, m.b0, one, one, zero, circ, true);
                mp.b1a = conv_geom(cur, m.b1_reduce, one, one, zero, circ, true);
                mp.b1b = conv_geom(mp.b1a.out, m.b1, k3, one, p3, circ, true);
                mp.b2a = conv_geom(cur, m.b2_reduce, one, one, zero, circ, true);
                mp.b2b = conv_geom(mp.b2a.out, m.b2, k3, one, p3, circ, true);
                mp.pool = pool_geom(cur, k3, one, p3);
                mp.b3 = conv_geom(mp.pool.out, m.b3, one, one, zero, circ, true);
                p.n_params = 12;
                break;
            }
        }
        param += p.n_params;
        cur = p.out;
        plan.push_back(p);
    }
    return plan;
}

template <typename T>
struct MixedCache {
    std::vector<T> b0, b1a, b1b, b2a, b2b, pool, b3;
    std::vector<int> pool_arg;
};

template <typename T>
struct LayerCache {
    std::vector<T> input;
    std::vector<T> output;
    std::vector<int> argmax;
    MixedCache<T> mixed;
};

template <typename T>
struct Pass {
    const std::vector<LayerPlan>& plan;
    const ModelParams<T>& params;
    std::vector<T> scratch;

    const T* P(std::size_t i) const { return params.items[i].value.ptr(); }

    // Runs layer `l` on `in`; fills `out` and, when `cache` is set, what the
    // backward pass needs.
    void layer_forward(const LayerPlan& lp, const std::vector<T>& in, std::vector<T>& out, LayerCache<T>* cache) {
        out.resize(lp.out.numel());
        switch (lp.kind) {
            case LayerSpec::Kind::Conv:
                conv_forward(lp.conv, P(lp.first_param), P(lp.first_param + 1), in.data(), out.data(), scratch);
                break;
            case LayerSpec::Kind::MaxPool:
                pool_forward(lp.pool, in.data(), out.data(), cache ? &cache->argmax : nullptr);
                break;
            case LayerSpec::Kind::Mixed: {
                const MixedPlan& m = lp.mixed;
                const std::size_t f = lp.first_param;
                MixedCache<T> local;
                MixedCache<T>& mc = cache ? cache->mixed : local;
                auto run = [&](const ConvGeom& g, std::size_t pi, const T* src, std::vector<T>& dst) {
                    dst.resize(g.out.numel());
                    conv_forward(g, P(pi), P(pi + 1), src, dst.data(), scratch);
                };
                run(m.b0, f, in.data(), mc.b0);
                run(m.b1a, f + 2, in.data(), mc.b1a);
                run(m.b1b, f + 4, mc.b1a.data(), mc.b1b);
                run(m.b2a, f + 6, in.data(), mc.b2a);
                run(m.b2b, f + 8, mc.b2a.data(), mc.b2b);
                mc.pool.resize(m.pool.out.numel());
                pool_forward(m.pool, in.data(), mc.pool.data(), cache ? &mc.pool_arg : nullptr);
                run(m.b3, f + 10, mc.pool.data(), mc.b3);
                T* dst = out.data();
                for (const std::vector<T>* part : {&mc.b0, &mc.b1b, &mc.b2b, &mc.b3}) {
                    std::copy(part->begin(), part->end(), dst);
                    dst += part->size();
                }
                break;
            }
        }
        if (cache) {
            cache->input = in;
            cache->output = out;
        }
    }

    // Accumulates parameter gradients (into grads[i] when non-empty) and, if
    // `din` is non-null, the input gradient.
    void layer_backward(const LayerPlan& lp, LayerCache<T>& cache, std::vector<T>& dout,
                        std::vector<std::vector<T>>& grads, std::vector<T>* din) {
        auto gp = [&](std::size_t i) -> T* { return grads[i].empty() ? nullptr : grads[i].data(); };
        if (din) din->assign(lp.in.numel(), T(0));
        T* dinp = din ? din->data() : nullptr;
        switch (lp.kind) {
            case LayerSpec::Kind::Conv:
                conv_backward(lp.conv, P(lp.first_param), cache.input.data(), cache.output.data(), dout.data(),
                              gp(lp.first_param), gp(lp.first_param + 1), dinp, scratch);
                break;
            case LayerSpec::Kind::MaxPool:
                if (dinp) pool_backward(lp.pool, cache.argmax, dout.data(), dinp);
                break;
            case LayerSpec::Kind::Mixed: {
                const MixedPlan& m = lp.mixed;
                MixedCache<T>& mc = cache.mixed;
                const std::size_t f = lp.first_param;
                const T* x = cache.input.data();
                std::size_t off = 0;
                auto slice = [&](std::size_t n) {
                    std::vector<T> s(dout.begin() + off, dout.begin() + off + n);
                    off += n;
                    return s;
                };
                std::vector<T> d0 = slice(mc.b0.size()), d1 = slice(mc.b1b.size()), d2 = slice(mc.b2b.size()),
                               d3 = slice(mc.b3.size());
                conv_backward(m.b0, P(f), x, mc.b0.data(), d0.data(), gp(f), gp(f + 1), dinp, scratch);
                std::vector<T> mid(mc.b1a.size(), T(0));
                conv_backward(m.b1b, P(f + 4), mc.b1a.data(), mc.b1b.data(), d1.data(), gp(f + 4), gp(f + 5),
                              mid.data(), scratch);
                conv_backward(m.b1a, P(f + 2), x, mc.b1a.data(), mid.data(), gp(f + 2), gp(f + 3), dinp, scratch);
                mid.assign(mc.b2a.size(), T(0));
                conv_backward(m.b2b, P(f + 8), mc.b2a.data(), mc.b2b.data(), d2.data(), gp(f + 8), gp(f + 9),
                              mid.data(), scratch);
                conv_backward(m.b2a, P(f + 6), x, mc.b2a.data(), mid.data(), gp(f + 6), gp(f + 7), dinp, scratch);
                mid.assign(mc.pool.size(), T(0));
                conv_backward(m.b3, P(f + 10), mc.pool.data(), mc.b3.data(), d3.data(), gp(f + 10), gp(f + 11),
                              mid.data(), scratch);
                if (dinp) pool_backward(m.pool, mc.pool_arg, mid.data(), dinp);
                break;
            }
        }
    }
};

}  // namespace

template <typename T>
Network<T>::Network(NetSpec spec) : spec_(std::move(spec)), shapes_(spec_.shapes()) {}

template <typename T>
ModelParams<T> Network<T>::init_params(std::uint64_t seed) const {
    ModelParams<T> out;
    std::mt19937_64 rng(mix_seed(seed, 0x1417));
    for (const auto& [name, dims] : spec_.param_shapes()) {
        Param<T> p{name, Tensor<T>(dims), false};
        if (dims.size() == 5) {
            const double fan_in = double(dims[1]) * dims[2] * dims[3] * dims[4];
            const bool head = name.rfind("head.", 0) == 0;
            const double stddev = head ? 0.01 : std::sqrt(2.0 / fan_in);
            for (T& v : p.value.data) v = static_cast<T>(stddev * normal(rng));
        }
        out.items.push_back(std::move(p));
    }
    return out;
}

template <typename T>
void Network<T>::check_params(const ModelParams<T>& params) const {
    auto expected = spec_.param_shapes();
    if (expected.size() != params.items.size())
        model_error(fmt::format("parameter set has {} tensors, network expects {}", params.items.size(), expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const Param<T>& p = params.items[i];
        if (p.name != expected[i].first)
            model_error(fmt::format("parameter {} is '{}', expected '{}'", i, p.name, expected[i].first));
        if (p.value.dims != expected[i].second || !p.value.valid())
            model_error(fmt::format("parameter '{}' has dims {}, expected {}", p.name, dims_string(p.value.dims),
                                    dims_string(expected[i].second)));
    }
}

namespace {

template <typename T>
std::vector<T> run_backbone(const std::vector<LayerPlan>& plan, const ModelParams<T>& params, const T* input,
                            std::size_t input_numel, std::vector<LayerCache<T>>* caches, std::size_t cache_from) {
    Pass<T> pass{plan, params, {}};
    std::vector<T> cur(input, input + input_numel), next;
    if (caches) caches->resize(plan.size());
    for (std::size_t l = 0; l < plan.size(); ++l) {
        LayerCache<T>* c = (caches && l >= cache_from) ? &(*caches)[l] : nullptr;
        pass.layer_forward(plan[l], cur, next, c);
        std::swap(cur, next);
    }
    // Global average pool.
    const Shape s = plan.empty() ? Shape{0, 0, 0, 0} : plan.back().out;
    const std::size_t vol = std::size_t(s.t) * s.h * s.w;
    std::vector<T> feats(s.c);
    for (int c = 0; c < s.c; ++c) {
        T acc = 0;
        for (std::size_t i = 0; i < vol; ++i) acc += cur[c * vol + i];
        feats[c] = acc / static_cast<T>(vol);
    }
    return feats;
}

template <typename T>
std::vector<T> apply_head(const ModelParams<T>& params, const std::vector<T>& feats, int outputs) {
    const Param<T>& w = params.items[params.items.size() - 2];
    const Param<T>& b = params.items.back();
    const int C = static_cast<int>(feats.size());
    std::vector<T> z(outputs);
    for (int k = 0; k < outputs; ++k) {
        T acc = b.value.data[k];
        for (int c = 0; c < C; ++c) acc += w.value.data[std::size_t(k) * C + c] * feats[c];
        z[k] = acc;
    }
    return z;
}

// Loss of one sample and d(loss)/d(logits).
template <typename T>
T sample_loss(const std::vector<T>& z, int label, std::vector<T>* dz) {
    if (z.size() == 1) {
        const T y = static_cast<T>(label);
        const T loss = std::max(z[0], T(0)) - z[0] * y + std::log1p(std::exp(-std::abs(z[0])));
        if (dz) *dz = {sigmoid(z[0]) - y};
        return loss;
    }
    if (label < 0 || label >= static_cast<int>(z.size())) model_error(fmt::format("label {} out of range", label));
    const T m = *std::max_element(z.begin(), z.end());
    T sum = 0;
    for (T v : z) sum += std::exp(v - m);
    const T lse = m + std::log(sum);
    if (dz) {
        dz->resize(z.size());
        for (std::size_t k = 0; k < z.size(); ++k) (*dz)[k] = std::exp(z[k] - lse) - (int(k) == label ? T(1) : T(0));
    }
    return lse - z[label];
}

}  // namespace

template <typename T>
std::vector<T> Network<T>::features(const ModelParams<T>& params, const T* input) const {
    check_params(params);
    auto plan = make_plan(spec_);
    return run_backbone(plan, params, input, spec_.input_shape().numel(), static_cast<std::vector<LayerCache<T>>*>(nullptr), 0);
}

template <typename T>
std::vector<T> Network<T>::logits(const ModelParams<T>& params, const T* input) const {
    return apply_head(params, features(params, input), spec_.head_outputs);
}

template <typename T>
std::vector<T> Network<T>::forward(const ModelParams<T>& params, const Tensor<T>& batch) const {
    check_params(params);
    const Shape in = spec_.input_shape();
    if (batch.rank() != 5 || batch.dim(1) != in.c || batch.dim(2) != in.t || batch.dim(3) != in.h || batch.dim(4) != in.w)
        model_error(fmt::format("batch dims {} do not match network input [Nx{}x{}x{}x{}]", dims_string(batch.dims),
                                in.c, in.t, in.h, in.w));
    auto plan = make_plan(spec_);
    const int n = batch.dim(0);
    std::vector<T> scores(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        auto f = run_backbone(plan, params, batch.ptr() + i * in.numel(), in.numel(), static_cast<std::vector<LayerCache<T>>*>(nullptr), 0);
        scores[i] = sigmoid(apply_head(params, f, spec_.head_outputs)[0]);
    });
    return scores;
}

template <typename T>
T Network<T>::loss_and_gradients(const ModelParams<T>& params, const std::vector<const T*>& inputs,
                                 const std::vector<int>& labels, Gradients<T>& grads) const {
    check_params(params);
    if (inputs.empty() || inputs.size() != labels.size()) model_error("loss_and_gradients: batch/label size mismatch");
    auto plan = make_plan(spec_);
    const std::size_t n_params = params.items.size();

    // First layer holding a trainable tensor; nothing before it needs caches.
    std::size_t first_trainable = plan.size();
    for (std::size_t l = 0; l < plan.size() && first_trainable == plan.size(); ++l)
        for (std::size_t i = 0; i < plan[l].n_params; ++i)
            if (!params.items[plan[l].first_param + i].frozen) first_trainable = l;

    const std::size_t N = inputs.size();
    const T inv_n = T(1) / static_cast<T>(N);
    std::vector<T> losses(N);
    std::vector<std::vector<std::vector<T>>> per_sample(N);
    const std::size_t in_numel = spec_.input_shape().numel();

    parallel_for(N, [&](std::size_t s) {
        std::vector<LayerCache<T>> caches;
        auto feats = run_backbone(plan, params, inputs[s], in_numel, &caches, first_trainable);
        auto z = apply_head(params, feats, spec_.head_outputs);
        std::vector<T> dz;
        losses[s] = sample_loss(z, labels[s], &dz);
        for (T& v : dz) v *= inv_n;

        auto& g = per_sample[s];
        g.resize(n_params);
        for (std::size_t i = 0; i < n_params; ++i)
            if (!params.items[i].frozen) g[i].assign(params.items[i].value.numel(), T(0));

        const Param<T>& hw = params.items[n_params - 2];
        const int C = static_cast<int>(feats.size());
        if (!g[n_params - 2].empty())
            for (int k = 0; k < spec_.head_outputs; ++k)
                for (int c = 0; c < C; ++c) g[n_params - 2][std::size_t(k) * C + c] += dz[k] * feats[c];
        if (!g[n_params - 1].empty())
            for (int k = 0; k < spec_.head_outputs; ++k) g[n_params - 1][k] += dz[k];
        if (first_trainable == plan.size()) return;

        std::vector<T> dfeat(C, T(0));
        for (int k = 0; k < spec_.head_outputs; ++k)
            for (int c = 0; c < C; ++c) dfeat[c] += hw.value.data[std::size_t(k) * C + c] * dz[k];
        const Shape last = plan.back().out;
        const std::size_t vol = std::size_t(last.t) * last.h * last.w;
        std::vector<T> dact(last.numel()), dprev;
        for (int c = 0; c < C; ++c) std::fill_n(dact.begin() + c * vol, vol, dfeat[c] / static_cast<T>(vol));

        Pass<T> pass{plan, params, {}};
        for (std::size_t l = plan.size(); l-- > first_trainable;) {
            const bool need_din = l > first_trainable;
            pass.layer_backward(plan[l], caches[l], dact, g, need_din ? &dprev : nullptr);
            if (need_din) std::swap(dact, dprev);
            caches[l] = LayerCache<T>{};
        }
    });

    T total = 0;
    for (std::size_t s = 0; s < N; ++s) {
        if (!std::isfinite(static_cast<double>(losses[s]))) model_error("non-finite loss");
        total += losses[s];
    }
    grads.clear();
    for (std::size_t i = 0; i < n_params; ++i) {
        if (params.items[i].frozen) continue;
        Tensor<T> t(params.items[i].value.dims);
        for (std::size_t s = 0; s < N; ++s)
            for (std::size_t j = 0; j < t.numel(); ++j) t.data[j] += per_sample[s][i][j];
        grads.emplace(params.items[i].name, std::move(t));
    }
    return total * inv_n;
}

template <typename T>
T Network<T>::loss_and_gradients(const ModelParams<T>& params, const Tensor<T>& batch, const std::vector<int>& labels,
                                 Gradients<T>& grads) const {
    const std::size_t per = spec_.input_shape().numel();
    if (batch.rank() < 1 || batch.numel() != per * static_cast<std::size_t>(batch.dim(0)))
        model_error(fmt::format("batch dims {} do not match network input", dims_string(batch.dims)));
    std::vector<const T*> ptrs;
    for (int i = 0; i < batch.dim(0); ++i) ptrs.push_back(batch.ptr() + i * per);
    return loss_and_gradients(params, ptrs, labels, grads);
}

template <typename T>
T Network<T>::loss(const ModelParams<T>& params, const Tensor<T>& batch, const std::vector<int>& labels) const {
    check_params(params);
    const std::size_t per = spec_.input_shape().numel();
    auto plan = make_plan(spec_);
    const int n = batch.dim(0);
    if (static_cast<int>(labels.size()) != n) model_error("loss: batch/label size mismatch");
    std::vector<T> losses(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        auto f = run_backbone(plan, params, batch.ptr() + i * per, per, static_cast<std::vector<LayerCache<T>>*>(nullptr), 0);
        losses[i] = sample_loss(apply_head(params, f, spec_.head_outputs), labels[i], static_cast<std::vector<T>*>(nullptr));
    });
    T total = 0;
    for (T l : losses) total += l;
    return total / static_cast<T>(n);
}

template class Network<float>;
template class Network<double>;

template <typename T>
void clip_to_input(const ClipSample& clip, std::vector<T>& out) {
    const int T_ = clip.frames, S = clip.size, C = clip.channels;
    out.resize(std::size_t(C) * T_ * S * S);
    const bool rgb = C == 3;
    for (int t = 0; t < T_; ++t)
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x)
                for (int c = 0; c < C; ++c) {
                    const float v = clip.at(t, y, x, c);
                    out[((std::size_t(c) * T_ + t) * S + y) * S + x] = static_cast<T>(rgb ? 2.0f * v - 1.0f : v);
                }
}

template void clip_to_input<float>(const ClipSample&, std::vector<float>&);
template void clip_to_input<double>(const ClipSample&, std::vector<double>&);

template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                         std::array<int, 3> stride, std::array<int, 3> pad) {
    if (input.rank() != 5 || weight.rank() != 5 || bias.rank() != 1 || !input.valid() || !weight.valid())
        model_error(fmt::format("conv3d: expected 5-d input/weight and 1-d bias, got {} {} {}", dims_string(input.dims),
                                dims_string(weight.dims), dims_string(bias.dims)));
    if (weight.dim(1) != input.dim(1) || bias.dim(0) != weight.dim(0))
        model_error(fmt::format("conv3d: input {} incompatible with weight {} / bias {}", dims_string(input.dims),
                                dims_string(weight.dims), dims_string(bias.dims)));
    const Shape in{input.dim(1), input.dim(2), input.dim(3), input.dim(4)};
    const std::array<int, 3> k{weight.dim(2), weight.dim(3), weight.dim(4)};
    const int ext[3] = {in.t, in.h, in.w};
    for (int d = 0; d < 3; ++d) check_extent(ext[d], k[d], stride[d], pad[d], "conv3d " + dims_string(input.dims));
    const ConvGeom g = conv_geom(in, weight.dim(0), k, stride, pad, false, false);
    Tensor<T> out({input.dim(0), g.out.c, g.out.t, g.out.h, g.out.w});
    std::vector<T> scratch;
    for (int n = 0; n < input.dim(0); ++n)
        conv_forward(g, weight.ptr(), bias.ptr(), input.ptr() + n * in.numel(), out.ptr() + n * g.out.numel(), scratch);
    return out;
}

template Tensor<float> conv3d_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                      std::array<int, 3>, std::array<int, 3>);
template Tensor<double> conv3d_forward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                       std::array<int, 3>, std::array<int, 3>);

template <typename T>
Tensor<T> inflate_2d_to_3d(const Tensor<T>& kernel2d, int kt) {
    if (kt < 1) model_error("inflate: kT must be at least 1");
    std::vector<int> d = kernel2d.dims;
    if (d.size() == 5 && d[2] == 1) d.erase(d.begin() + 2);
    if (d.size() != 4 || !kernel2d.valid())
        model_error(fmt::format("inflate: expected a 2-d kernel, got {}", dims_string(kernel2d.dims)));
    Tensor<T> out({d[0], d[1], kt, d[2], d[3]});
    const std::size_t plane = std::size_t(d[2]) * d[3];
    const std::size_t pairs = std::size_t(d[0]) * d[1];
    for (std::size_t oc = 0; oc < pairs; ++oc)
        for (int t = 0; t < kt; ++t)
            for (std::size_t i = 0; i < plane; ++i)
                out.data[(oc * kt + t) * plane + i] = kernel2d.data[oc * plane + i] / static_cast<T>(kt);
    return out;
}

template Tensor<float> inflate_2d_to_3d(const Tensor<float>&, int);
template Tensor<double> inflate_2d_to_3d(const Tensor<double>&, int);

template <typename T>
ModelParams<T> inflate_params(const ModelParams<T>& params2d, const NetSpec& spec3d, const ModelParams<T>& head,
                              bool freeze) {
    const auto shapes = spec3d.param_shapes();
    const std::size_t backbone = spec3d.backbone_param_count();
    ModelParams<T> out;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& [name, dims] = shapes[i];
        if (i >= backbone) {
            const Param<T>& h = head.at(name);
            if (h.value.dims != dims)
                model_error(fmt::format("inflate: head '{}' has dims {}, expected {}", name, dims_string(h.value.dims),
                                        dims_string(dims)));
            out.items.push_back({name, h.value, false});
            continue;
        }
        const Param<T>& src = params2d.at(name);
        if (dims.size() == 1) {
            if (src.value.dims != dims) model_error(fmt::format("inflate: bias '{}' shape mismatch", name));
            out.items.push_back({name, src.value, freeze});
            continue;
        }
        Tensor<T> k2 = src.value;
        if (k2.rank() != 5 || k2.dim(0) != dims[0] || k2.dim(3) != dims[3] || k2.dim(4) != dims[4])
            model_error(fmt::format("inflate: '{}' has dims {}, cannot inflate to {}", name, dims_string(k2.dims),
                                    dims_string(dims)));
        if (k2.dim(1) != dims[1]) {
            const int co = k2.dim(0), ci = k2.dim(1);
            const std::size_t plane = std::size_t(k2.dim(2)) * k2.dim(3) * k2.dim(4);
            Tensor<T> adapted({co, dims[1], k2.dim(2), k2.dim(3), k2.dim(4)});
            for (int o = 0; o < co; ++o)
                for (std::size_t j = 0; j < plane; ++j) {
                    T mean = 0;
                    for (int c = 0; c < ci; ++c) mean += k2.data[(std::size_t(o) * ci + c) * plane + j];
                    mean /= static_cast<T>(ci);
                    for (int c = 0; c < dims[1]; ++c) adapted.data[(std::size_t(o) * dims[1] + c) * plane + j] = mean;
                }
            k2 = std::move(adapted);
        }
        out.items.push_back({name, inflate_2d_to_3d(k2, dims[2]), freeze});
    }
    return out;
}

template ModelParams<float> inflate_params(const ModelParams<float>&, const NetSpec&, const ModelParams<float>&, bool);
template ModelParams<double> inflate_params(const ModelParams<double>&, const NetSpec&, const ModelParams<double>&,
                                            bool);

double fuse_two_stream(double score_rgb, double score_flow) { return 0.5 * (score_rgb + score_flow); }

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

template <typename V>
void put(std::ostream& out, V v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::istream& in, const std::filesystem::path& path) {
    V v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!in) model_error(fmt::format("{}: truncated checkpoint", path.string()));
    return v;
}

}  // namespace

void save_params(const ModelParams<float>& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) model_error(fmt::format("cannot write checkpoint {}", path.string()));
    out.write("SWNET", 5);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.items.size()));
    for (const auto& p : params.items) {
        if (!p.value.valid()) model_error(fmt::format("parameter '{}' has inconsistent dims", p.name));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put<std::uint8_t>(out, p.frozen ? 1 : 0);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.dims.size()));
        for (int d : p.value.dims) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.data.size() * sizeof(float)));
    }
    if (!out) model_error(fmt::format("write failed: {}", path.string()));
}

ModelParams<float> load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) model_error(fmt::format("cannot open checkpoint {}", path.string()));
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "SWNET", 5) != 0) model_error(fmt::format("{}: not a checkpoint (bad magic)", path.string()));
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        model_error(fmt::format("{}: checkpoint version {} unsupported (expected {})", path.string(), version,
                                kCheckpointVersion));
    const auto count = get<std::uint32_t>(in, path);
    ModelParams<float> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = get<std::uint32_t>(in, path);
        if (len > 4096) model_error(fmt::format("{}: implausible name length", path.string()));
        std::string name(len, '\0');
        in.read(name.data(), len);
        const bool frozen = get<std::uint8_t>(in, path) != 0;
        const auto rank = get<std::uint8_t>(in, path);
        std::vector<int> dims(rank);
        for (auto& d : dims) d = static_cast<int>(get<std::uint32_t>(in, path));
        Tensor<float> t(dims);
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(t.data.size() * sizeof(float)))
            model_error(fmt::format("{}: truncated checkpoint", path.string()));
        out.items.push_back({std::move(name), std::move(t), frozen});
    }
    return out;
}

}  // namespace hhm
