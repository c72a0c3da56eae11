// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

#include "hhm/videoio.hpp"

namespace hhm {

/// Dense displacement field in pixels per frame.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;

    FlowField() = default;
    FlowField(int w, int h) : width(w), height(h), u(std::size_t(w) * h, 0.0f), v(std::size_t(w) * h, 0.0f) {}

    /// Two-channel frame (dx, dy interleaved).
    Frame to_frame() const;
    static FlowField from_frame(const Frame& f);
};

struct TvL1Params {
    /// Weight of the L1 data term against total variation.
    double lambda = 0.15;
    /// Coupling between the primal flow and its auxiliary copy.
    double theta = 0.3;
    /// Dual step; stability requires tau <= 0.25.
    double tau = 0.25;
    int warps = 5;
    int iterations = 25;
    /// Coarser levels are added while both sides stay at or above this size.
    int min_level_size = 16;
    double level_scale = 0.5;
    /// Inner iterations stop once the mean squared flow update drops below epsilon^2.
    double epsilon = 0.01;
    /// Intensities are multiplied by this before solving so lambda keeps its
    /// usual meaning for 8-bit ranges.
    double intensity_scale = 255.0;
    double presmooth_sigma = 0.8;
    /// Subtract each image's mean intensity, removing global brightness offsets.
    bool zero_mean = true;

    void validate() const;
};

/// Per-(level, warp) value of the coupled objective
/// sum lambda*|rho(v)| + |u-v|^2/(2 theta) + TV(u1) + TV(u2), recorded before
/// the first and after every inner iteration, finest level last.
struct FlowTrace {
    struct Stage {
        int level = 0;
        int warp = 0;
        std::vector<double> energy;
    };
    std::vector<Stage> stages;
};

/// Coarse-to-fine TV-L1 (duality based, Chambolle projection for the TV part).
/// Inputs are single-channel frames of equal size; RGB is converted by luminance.
FlowField tvl1_flow(const Frame& I0, const Frame& I1, const TvL1Params& params, FlowTrace* trace = nullptr);

/// Flow between consecutive frames, clipped to [-cap, cap] and divided by cap.
/// The last flow frame is repeated so the output length matches the input.
FrameSequence flow_sequence(const FrameSequence& seq, const TvL1Params& params, double cap = 20.0);

}  // namespace hhm
