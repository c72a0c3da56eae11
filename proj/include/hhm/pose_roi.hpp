// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "hhm/common.hpp"

namespace hhm {

/// COCO-18 joint order.
enum Joint : int {
    kNose = 0,
    kNeck,
    kRShoulder,
    kRElbow,
    kRWrist,
    kLShoulder,
    kLElbow,
    kLWrist,
    kRHip,
    kRKnee,
    kRAnkle,
    kLHip,
    kLKnee,
    kLAnkle,
    kREye,
    kLEye,
    kREar,
    kLEar,
};

inline constexpr int kNumJoints = 18;
inline constexpr std::array<int, 6> kArmJoints = {kRShoulder, kRElbow, kRWrist, kLShoulder, kLElbow, kLWrist};

/// Confidence 0 marks a missing joint.
struct Keypoint {
    double x = 0;
    double y = 0;
    double confidence = 0;
};

using Skeleton = std::array<Keypoint, kNumJoints>;

struct PersonPose {
    /// Generator ground-truth identity, -1 when unknown. Only test oracles read it.
    int hint = -1;
    Skeleton joints{};
};

struct PoseFrame {
    int frame_index = 0;
    std::vector<PersonPose> persons;
};

struct RoiParams {
    double margin_frac = 0.25;
    double min_confidence = 0.1;
    int min_joints = 4;
};

/// Reads `frame person_hint x0 y0 c0 ... x17 y17 c17` lines. Frames come back
/// in ascending index order; persons keep file order within a frame.
std::vector<PoseFrame> load_poses(const std::filesystem::path& path);
void save_poses(const std::vector<PoseFrame>& frames, const std::filesystem::path& path);

/// Margin-expanded box around the confident arm joints, before clamping.
std::optional<BBox> upper_body_roi_unclamped(const Skeleton& joints, const RoiParams& params);

/// Upper-body ROI clamped to [0,w] x [0,h]; nullopt when too few arm joints are
/// confident or the clamped box has no area.
std::optional<BBox> upper_body_roi(const Skeleton& joints, const RoiParams& params, int frame_w, int frame_h);

}  // namespace hhm
