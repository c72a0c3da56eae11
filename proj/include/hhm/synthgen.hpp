// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hhm/clips.hpp"
#include "hhm/pose_roi.hpp"
#include "hhm/videoio.hpp"

namespace hhm {

/// Motion repertoire of a rendered person. Rub is the positive class; Reach
/// and Wave are the large-arc "other" actions; Idle is used for bystanders.
enum class Motion { Idle = 0, Rub = 1, Reach = 2, Wave = 3 };

const char* motion_name(Motion m);

struct PersonMotion {
    Motion kind = Motion::Idle;
    /// Neck position as a fraction of the frame width, plus slow sideways drift.
    double center_x = 0.5;
    double drift_amp = 0.0;  // fraction of frame width
    double drift_freq = 0.2;  // Hz
    double drift_phase = 0.0;
    /// Primary oscillation: wrist separation (Rub) or arm swing angle (Reach/Wave).
    double freq = 1.0;  // Hz
    double amp = 0.0;  // body units (Rub) or radians
    double phase = 0.0;
    /// -1 animates the person's right arm, +1 the left one.
    int side = 1;
    std::array<float, 3> color{0.8f, 0.3f, 0.2f};
};

struct SceneSpec {
    std::uint64_t seed = 0;
    int n_persons = 1;
    int n_frames = 32;
    int width = 160;
    int height = 120;
    double fps = 15.0;
    int class_label = 1;
    /// Probability that a joint is reported missing (confidence 0). Frame 0 is
    /// always complete so track ids at the first frame are well defined.
    double keypoint_dropout = 0.0;
    /// Per-person motion; derived from the seed when empty. Person 0 is the actor.
    std::vector<PersonMotion> motion;

    void validate() const;
};

struct Scene {
    FrameSequence frames;
    std::vector<PoseFrame> poses;
    AnnotationRecord annotation;
    /// Generator ground truth: which person (by hint) the annotation is about.
    int actor_hint = 0;
};

/// Fills in motion parameters for every person from the spec's seed.
std::vector<PersonMotion> default_motion(const SceneSpec& spec);

/// Joint positions of a person at time t (seconds).
Skeleton pose_at(const PersonMotion& m, double t, int width, int height);

/// Renders the scene, its keypoint stream and the annotation. Identical specs
/// give bit-identical output.
Scene generate_scene(const SceneSpec& spec);

/// Still of a single person in a random phase of `kind`, cropped to its
/// upper-body ROI and resized to size x size. Used by the pretraining task.
Frame generate_still(std::uint64_t seed, Motion kind, int width, int height, int size, const RoiParams& roi);

struct SceneGroup {
    int label = 1;
    int count = 0;
    int min_frames = 18;
    int max_frames = 30;
    /// When set, clip lengths are spread evenly to hit this total exactly.
    std::optional<int> total_frames;
    bool synthetic = false;
    std::vector<std::string> date_tags;
};

struct DatasetConfig {
    std::uint64_t seed = 0;
    int width = 160;
    int height = 120;
    double fps = 15.0;
    int n_persons = 2;
    double keypoint_dropout = 0.0;
    std::vector<SceneGroup> groups;

    void validate() const;
};

/// `rubbing` positives and `other` negatives spread round-robin over `dates`
/// recording days named D01, D02, ...
DatasetConfig simple_dataset_config(int rubbing, int other, int dates, std::uint64_t seed);

struct ManifestEntry {
    std::string video_id;
    std::string date_tag;
    int label = 0;
    std::string frames_dir;
    std::string keypoints_file;
    int start_frame = 0;
    int end_frame = 0;
    int track_id = 0;
    std::string action_name;
    bool synthetic = false;
};

/// Writes videos/<id>/frames, videos/<id>/keypoints.txt, dataset.json and
/// annotations.csv under `root`. Paths in the manifest are relative to root.
std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& root);

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& root);

/// Mean per-frame wrist speed of the actor in body units; a learnability probe.
double mean_wrist_speed(const std::vector<PoseFrame>& poses, int hint, int frame_h);

}  // namespace hhm
