// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hhm/net.hpp"
#include "hhm/pose_roi.hpp"

namespace hhm {

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 8;
    int epochs = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Labeled samples in network layout. A sample may differ between epochs
/// (augmentation) but must be a pure function of (index, epoch).
template <typename T>
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual int label(std::size_t i) const = 0;
    virtual void fill(std::size_t i, int epoch, std::vector<T>& out) const = 0;
};

/// Fixed samples held in an N x ... tensor.
template <typename T>
class TensorSource : public SampleSource<T> {
public:
    TensorSource(Tensor<T> inputs, std::vector<int> labels);
    std::size_t size() const override { return labels_.size(); }
    int label(std::size_t i) const override { return labels_[i]; }
    void fill(std::size_t i, int epoch, std::vector<T>& out) const override;

private:
    Tensor<T> inputs_;
    std::vector<int> labels_;
    std::size_t per_ = 0;
};

template <typename T>
struct TrainResult {
    ModelParams<T> params;
    /// Mean minibatch loss of each epoch.
    std::vector<double> loss_curve;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Per-feature mean and scale of pooled backbone features.
template <typename T>
struct FeatureStats {
    std::vector<T> mean;
    std::vector<T> scale;
};

/// Feature statistics of up to `max_samples` evenly spaced epoch-0 samples.
/// Scales are standard deviations floored at 1e-3 of the largest one.
template <typename T>
FeatureStats<T> feature_stats(const Network<T>& net, const ModelParams<T>& params, const SampleSource<T>& data,
                              std::size_t max_samples = 256);

/// Minibatch SGD with momentum (v = mu*v + g; p -= lr*v) on unfrozen tensors.
/// Batch order is a seeded shuffle per epoch.
///
/// With `head_stats`, only the head may be trainable. SGD then runs on the
/// standardized head (w' = w*scale, b' = b + w.mean) and the result is mapped
/// back, so the returned network has the usual layout.
template <typename T>
TrainResult<T> train(const Network<T>& net, ModelParams<T> params, const SampleSource<T>& data,
                     const TrainConfig& cfg, const EpochCallback& on_epoch = {},
                     const FeatureStats<T>* head_stats = nullptr);

/// Still-image task used to pretrain the 2D twin: single-person crops of the
/// four motion kinds, classified with a 4-way softmax head.
struct PretrainConfig {
    int stills_per_class = 150;
    int width = 160;
    int height = 120;
    RoiParams roi;
    TrainConfig train{0.01, 0.9, 16, 8, 0};
};

/// The 2D twin of `spec3d` with a head sized for the still task.
NetSpec pretrain_spec(const NetSpec& spec3d);

/// Trains the 2D twin from scratch on generated stills.
TrainResult<float> pretrain_twin(const NetSpec& spec3d, const PretrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Inflates pretrained 2D weights into `spec3d`, freezes the backbone and
/// trains a freshly initialized head on `target`.
TrainResult<float> transfer_pretrain_then_finetune(const NetSpec& spec3d, const ModelParams<float>& pretrained2d,
                                                   const SampleSource<float>& target, const TrainConfig& cfg,
                                                   const EpochCallback& on_epoch = {});

/// Baseline: random backbone, frozen, head trained the same way.
TrainResult<float> scratch_head_finetune(const NetSpec& spec3d, const SampleSource<float>& target,
                                         const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace hhm
