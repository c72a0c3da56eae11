// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hhm/tensor.hpp"

namespace hhm {

struct ClipSample;

enum class TemporalPadding { Zero, Circular };

/// 3D convolution followed by an optional ReLU. Kernel, stride and padding are
/// ordered (time, height, width).
struct ConvSpec {
    std::string name;
    int out_channels = 1;
    std::array<int, 3> kernel{1, 1, 1};
    std::array<int, 3> stride{1, 1, 1};
    std::array<int, 3> pad{0, 0, 0};
    bool relu = true;
};

/// Max pooling; padded positions never win.
struct PoolSpec {
    std::array<int, 3> kernel{1, 1, 1};
    std::array<int, 3> stride{1, 1, 1};
    std::array<int, 3> pad{0, 0, 0};
};

/// Inception-style block: four parallel branches concatenated on channels.
///   b0: 1x1x1
///   b1: 1x1x1 (b1_reduce) -> kt x3x3 (b1)
///   b2: 1x1x1 (b2_reduce) -> kt x3x3 (b2)
///   b3: kt x3x3 max pool -> 1x1x1 (b3)
struct MixedSpec {
    std::string name;
    int b0 = 1, b1_reduce = 1, b1 = 1, b2_reduce = 1, b2 = 1, b3 = 1;
    int kt = 3;

    int out_channels() const { return b0 + b1 + b2 + b3; }
};

struct LayerSpec {
    enum class Kind { Conv, MaxPool, Mixed };
    Kind kind = Kind::Conv;
    ConvSpec conv;
    PoolSpec pool;
    MixedSpec mixed;

    static LayerSpec make_conv(ConvSpec c) { LayerSpec l; l.kind = Kind::Conv; l.conv = std::move(c); return l; }
    static LayerSpec make_pool(PoolSpec p) { LayerSpec l; l.kind = Kind::MaxPool; l.pool = p; return l; }
    static LayerSpec make_mixed(MixedSpec m) { LayerSpec l; l.kind = Kind::Mixed; l.mixed = std::move(m); return l; }
};

/// Backbone layers, then global average pooling, then a 1x1x1 head conv.
/// A single head output is read through a sigmoid; several through softmax.
struct NetSpec {
    int in_channels = 3;
    int frames = 16;
    int size = 56;
    std::vector<LayerSpec> layers;
    int head_outputs = 1;
    TemporalPadding temporal_padding = TemporalPadding::Zero;

    struct Shape {
        int c, t, h, w;
        std::size_t numel() const { return std::size_t(c) * t * h * w; }
    };

    /// conv 8ch 3x5x5 /(1,2,2) -> maxpool (1,2,2) -> mixed(24) -> maxpool(2,2,2)
    /// -> mixed(32) -> global average pool -> 1x1x1 head.
    static NetSpec i3d_mini(int in_channels = 3, int size = 56, int frames = 16);

    /// Same topology with every temporal extent collapsed to 1, fed single frames.
    NetSpec twin_2d() const;

    /// Activation shape after each backbone layer; throws on invalid arithmetic.
    std::vector<Shape> shapes() const;
    Shape input_shape() const { return {in_channels, frames, size, size}; }
    int feature_channels() const;

    /// Parameter names and shapes in canonical order; the head comes last.
    std::vector<std::pair<std::string, std::vector<int>>> param_shapes() const;
    /// Number of leading parameters that belong to the backbone.
    std::size_t backbone_param_count() const;

    std::string to_json() const;
    static NetSpec from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static NetSpec load(const std::filesystem::path& path);
};

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    bool frozen = false;
};

/// Named tensors with per-tensor frozen flags.
template <typename T>
struct ModelParams {
    std::vector<Param<T>> items;

    Param<T>* find(const std::string& name);
    const Param<T>* find(const std::string& name) const;
    Param<T>& at(const std::string& name);
    const Param<T>& at(const std::string& name) const;

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        for (const auto& p : items) out.items.push_back({p.name, p.value.template cast<U>(), p.frozen});
        return out;
    }

    void set_frozen_prefix(std::size_t count, bool frozen) {
        for (std::size_t i = 0; i < items.size(); ++i) items[i].frozen = i < count ? frozen : items[i].frozen;
    }
};

/// Gradients keyed by parameter name; only unfrozen tensors appear.
template <typename T>
using Gradients = std::map<std::string, Tensor<T>>;

/// Forward and backward passes for a NetSpec. Samples are processed one at a
/// time; batches parallelize over samples with a fixed reduction order.
template <typename T>
class Network {
public:
    explicit Network(NetSpec spec);

    const NetSpec& spec() const { return spec_; }

    /// He-normal weights, zero biases.
    ModelParams<T> init_params(std::uint64_t seed) const;
    /// Throws when names, shapes or count disagree with the spec.
    void check_params(const ModelParams<T>& params) const;

    /// Pooled backbone features of one C x T x H x W sample.
    std::vector<T> features(const ModelParams<T>& params, const T* input) const;
    /// Head outputs (pre-sigmoid) of one sample.
    std::vector<T> logits(const ModelParams<T>& params, const T* input) const;
    /// Sigmoid score per sample of a contiguous N x C x T x H x W batch.
    std::vector<T> forward(const ModelParams<T>& params, const Tensor<T>& batch) const;

    /// Mean loss over the batch plus its gradient for every unfrozen tensor.
    /// Labels are 0/1 for a sigmoid head or class indices for a softmax head.
    T loss_and_gradients(const ModelParams<T>& params, const std::vector<const T*>& inputs,
                         const std::vector<int>& labels, Gradients<T>& grads) const;
    T loss_and_gradients(const ModelParams<T>& params, const Tensor<T>& batch, const std::vector<int>& labels,
                         Gradients<T>& grads) const;

    /// Mean loss only.
    T loss(const ModelParams<T>& params, const Tensor<T>& batch, const std::vector<int>& labels) const;

private:
    NetSpec spec_;
    std::vector<NetSpec::Shape> shapes_;
};

/// Cross-correlation over an N x C x T x H x W input with zero padding and no
/// activation. Weight is Co x C x kT x kH x kW, bias Co.
template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                         std::array<int, 3> stride, std::array<int, 3> pad);

/// Repeats a Co x Ci x kH x kW (or Co x Ci x 1 x kH x kW) kernel kT times along
/// time and divides by kT. Result is Co x Ci x kT x kH x kW.
template <typename T>
Tensor<T> inflate_2d_to_3d(const Tensor<T>& kernel2d, int kt);

/// Builds parameters for `spec3d` from a 2D twin's parameters. Backbone
/// weights are inflated and biases copied; a first-layer input channel count
/// that differs from the source is handled by averaging the source channels
/// and replicating the mean. Head tensors come from `head` (typically a fresh
/// init of the 3D network). Backbone tensors are marked frozen when `freeze`.
template <typename T>
ModelParams<T> inflate_params(const ModelParams<T>& params2d, const NetSpec& spec3d, const ModelParams<T>& head,
                              bool freeze);

template <typename T>
T sigmoid(T z) {
    return z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

/// Converts a T x H x W x C clip to the C x T x H x W network layout. RGB values
/// are mapped from [0,1] to [-1,1]; flow values are already in [-1,1].
template <typename T>
void clip_to_input(const ClipSample& clip, std::vector<T>& out);

/// Late fusion of the two stream scores: their arithmetic mean.
double fuse_two_stream(double score_rgb, double score_flow);

/// Checkpoint: "SWNET", u32 version, u32 count, then per tensor
/// {u32 name length, name bytes, u8 frozen, u8 rank, u32 dims..., f32 data}.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_params(const ModelParams<float>& params, const std::filesystem::path& path);
ModelParams<float> load_params(const std::filesystem::path& path);

}  // namespace hhm
