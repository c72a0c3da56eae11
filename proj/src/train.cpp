// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/train.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "hhm/synthgen.hpp"

namespace hhm {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) config_error("train: learning_rate must be >= 0");
    if (!(momentum >= 0 && momentum < 1)) config_error("train: momentum must lie in [0,1)");
    if (batch_size < 1) config_error("train: batch_size must be positive");
    if (epochs < 0) config_error("train: epochs must be >= 0");
}

template <typename T>
TensorSource<T>::TensorSource(Tensor<T> inputs, std::vector<int> labels)
    : inputs_(std::move(inputs)), labels_(std::move(labels)) {
    if (inputs_.rank() < 1 || inputs_.dim(0) != static_cast<int>(labels_.size()))
        model_error(fmt::format("tensor source: {} inputs for {} labels", dims_string(inputs_.dims), labels_.size()));
    per_ = labels_.empty() ? 0 : inputs_.numel() / labels_.size();
}

template <typename T>
void TensorSource<T>::fill(std::size_t i, int, std::vector<T>& out) const {
    out.assign(inputs_.data.begin() + i * per_, inputs_.data.begin() + (i + 1) * per_);
}

template class TensorSource<float>;
template class TensorSource<double>;

template <typename T>
FeatureStats<T> feature_stats(const Network<T>& net, const ModelParams<T>& params, const SampleSource<T>& data,
                              std::size_t max_samples) {
    if (data.size() == 0 || max_samples == 0) model_error("feature_stats: no samples");
    const std::size_t n = std::min(data.size(), max_samples);
    std::vector<std::vector<T>> feats(n);
    parallel_for(n, [&](std::size_t k) {
        std::vector<T> input;
        data.fill(k * data.size() / n, 0, input);
        feats[k] = net.features(params, input.data());
    });
    const std::size_t D = feats[0].size();
    FeatureStats<T> st{std::vector<T>(D), std::vector<T>(D)};
    double largest = 0;
    std::vector<double> sd(D);
    for (std::size_t c = 0; c < D; ++c) {
        double s = 0, ss = 0;
        for (const auto& f : feats) s += f[c];
        const double m = s / static_cast<double>(n);
        for (const auto& f : feats) ss += (f[c] - m) * (f[c] - m);
        sd[c] = std::sqrt(ss / static_cast<double>(n));
        st.mean[c] = static_cast<T>(m);
        largest = std::max(largest, sd[c]);
    }
    const double floor = std::max(1e-3 * largest, 1e-12);
    for (std::size_t c = 0; c < D; ++c) st.scale[c] = static_cast<T>(std::max(sd[c], floor));
    return st;
}

template FeatureStats<float> feature_stats(const Network<float>&, const ModelParams<float>&,
                                           const SampleSource<float>&, std::size_t);
template FeatureStats<double> feature_stats(const Network<double>&, const ModelParams<double>&,
                                            const SampleSource<double>&, std::size_t);

namespace {

// Head in standardized coordinates: w' = w*s, b' = b + w.m.
template <typename T>
class StandardHead {
public:
    StandardHead(const FeatureStats<T>& st, const Param<T>& w, const Param<T>& b)
        : st_(st), C_(st.mean.size()), K_(b.value.numel()) {
        if (st.scale.size() != C_ || w.value.numel() != K_ * C_)
            model_error(fmt::format("train: feature stats of size {} do not fit head {}", C_, dims_string(w.value.dims)));
        w_ = w.value.data;
        b_ = b.value.data;
        for (std::size_t k = 0; k < K_; ++k)
            for (std::size_t c = 0; c < C_; ++c) {
                b_[k] += w_[k * C_ + c] * st_.mean[c];
                w_[k * C_ + c] *= st_.scale[c];
            }
        vw_.assign(w_.size(), T(0));
        vb_.assign(b_.size(), T(0));
    }

    void step(const Tensor<T>& gw, const Tensor<T>& gb, T lr, T mu, Param<T>& w, Param<T>& b) {
        for (std::size_t k = 0; k < K_; ++k) {
            for (std::size_t c = 0; c < C_; ++c) {
                const std::size_t j = k * C_ + c;
                const T g = (gw.data[j] - st_.mean[c] * gb.data[k]) / st_.scale[c];
                vw_[j] = mu * vw_[j] + g;
                w_[j] -= lr * vw_[j];
            }
            vb_[k] = mu * vb_[k] + gb.data[k];
            b_[k] -= lr * vb_[k];
        }
        for (std::size_t k = 0; k < K_; ++k) {
            T bias = b_[k];
            for (std::size_t c = 0; c < C_; ++c) {
                const std::size_t j = k * C_ + c;
                w.value.data[j] = w_[j] / st_.scale[c];
                bias -= w.value.data[j] * st_.mean[c];
            }
            b.value.data[k] = bias;
        }
    }

private:
    const FeatureStats<T>& st_;
    std::size_t C_, K_;
    std::vector<T> w_, b_, vw_, vb_;
};

}  // namespace

template <typename T>
TrainResult<T> train(const Network<T>& net, ModelParams<T> params, const SampleSource<T>& data,
                     const TrainConfig& cfg, const EpochCallback& on_epoch, const FeatureStats<T>* head_stats) {
    cfg.validate();
    net.check_params(params);
    if (data.size() == 0) model_error("train: empty dataset");

    const std::size_t n_items = params.items.size();
    std::optional<StandardHead<T>> head;
    if (head_stats) {
        for (std::size_t i = 0; i + 2 < n_items; ++i)
            if (!params.items[i].frozen) model_error("train: feature standardization needs a frozen backbone");
        head.emplace(*head_stats, params.items[n_items - 2], params.items[n_items - 1]);
    }

    std::vector<Tensor<T>> velocity(n_items);
    for (std::size_t i = 0; i < n_items; ++i)
        if (!params.items[i].frozen) velocity[i] = Tensor<T>(params.items[i].value.dims);

    TrainResult<T> result;
    std::vector<std::size_t> order(data.size());
    const T lr = static_cast<T>(cfg.learning_rate), mu = static_cast<T>(cfg.momentum);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

        double epoch_loss = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
            const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - b0);
            std::vector<std::vector<T>> inputs(n);
            std::vector<int> labels(n);
            parallel_for(n, [&](std::size_t k) { data.fill(order[b0 + k], epoch, inputs[k]); });
            std::vector<const T*> ptrs(n);
            for (std::size_t k = 0; k < n; ++k) {
                ptrs[k] = inputs[k].data();
                labels[k] = data.label(order[b0 + k]);
            }
            Gradients<T> grads;
            const T loss = net.loss_and_gradients(params, ptrs, labels, grads);
            epoch_loss += static_cast<double>(loss) * static_cast<double>(n);
            if (head) {
                Param<T>& w = params.items[n_items - 2];
                Param<T>& b = params.items[n_items - 1];
                if (!w.frozen || !b.frozen) head->step(grads.at(w.name), grads.at(b.name), lr, mu, w, b);
                continue;
            }
            for (std::size_t i = 0; i < n_items; ++i) {
                Param<T>& p = params.items[i];
                if (p.frozen) continue;
                const Tensor<T>& g = grads.at(p.name);
                Tensor<T>& v = velocity[i];
                for (std::size_t j = 0; j < p.value.numel(); ++j) {
                    v.data[j] = mu * v.data[j] + g.data[j];
                    p.value.data[j] -= lr * v.data[j];
                }
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        result.loss_curve.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    result.params = std::move(params);
    return result;
}

template TrainResult<float> train(const Network<float>&, ModelParams<float>, const SampleSource<float>&,
                                  const TrainConfig&, const EpochCallback&, const FeatureStats<float>*);
template TrainResult<double> train(const Network<double>&, ModelParams<double>, const SampleSource<double>&,
                                   const TrainConfig&, const EpochCallback&, const FeatureStats<double>*);

NetSpec pretrain_spec(const NetSpec& spec3d) {
    NetSpec s = spec3d.twin_2d();
    s.in_channels = 3;
    s.head_outputs = 4;
    return s;
}

TrainResult<float> pretrain_twin(const NetSpec& spec3d, const PretrainConfig& cfg, const EpochCallback& on_epoch) {
    if (cfg.stills_per_class < 1) config_error("pretrain: stills_per_class must be positive");
    const NetSpec spec = pretrain_spec(spec3d);
    const int S = spec.size;
    const std::size_t per = spec.input_shape().numel();
    const int n = 4 * cfg.stills_per_class;
    Tensor<float> inputs({n, 3, 1, S, S});
    std::vector<int> labels(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const int kind = static_cast<int>(i % 4);
        labels[i] = kind;
        Frame f = generate_still(mix_seed(cfg.train.seed, 0x5000 + i), static_cast<Motion>(kind), cfg.width, cfg.height,
                                 S, cfg.roi);
        float* dst = inputs.ptr() + i * per;
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x)
                for (int c = 0; c < 3; ++c) dst[(std::size_t(c) * S + y) * S + x] = 2.0f * f.at(x, y, c) - 1.0f;
    });
    Network<float> net(spec);
    TensorSource<float> source(std::move(inputs), std::move(labels));
    return train(net, net.init_params(mix_seed(cfg.train.seed, 0x2d)), source, cfg.train, on_epoch);
}

namespace {

ModelParams<float> fresh_head(const Network<float>& net3, std::uint64_t seed) { return net3.init_params(seed); }

}  // namespace

TrainResult<float> transfer_pretrain_then_finetune(const NetSpec& spec3d, const ModelParams<float>& pretrained2d,
                                                   const SampleSource<float>& target, const TrainConfig& cfg,
                                                   const EpochCallback& on_epoch) {
    Network<float> net(spec3d);
    auto params = inflate_params(pretrained2d, spec3d, fresh_head(net, mix_seed(cfg.seed, 0x4ead)), true);
    const auto stats = feature_stats(net, params, target);
    return train(net, std::move(params), target, cfg, on_epoch, &stats);
}

TrainResult<float> scratch_head_finetune(const NetSpec& spec3d, const SampleSource<float>& target,
                                         const TrainConfig& cfg, const EpochCallback& on_epoch) {
    Network<float> net(spec3d);
    auto params = net.init_params(mix_seed(cfg.seed, 0x5c2a));
    auto head = fresh_head(net, mix_seed(cfg.seed, 0x4ead));
    params.items[params.items.size() - 2] = head.items[head.items.size() - 2];
    params.items.back() = head.items.back();
    params.set_frozen_prefix(spec3d.backbone_param_count(), true);
    const auto stats = feature_stats(net, params, target);
    return train(net, std::move(params), target, cfg, on_epoch, &stats);
}

}  // namespace hhm
