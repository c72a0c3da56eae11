// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hhm/linker.hpp"
#include "hhm/videoio.hpp"

namespace hhm {

inline constexpr int kClipFrames = 16;

/// One annotated action clip: frames [start_frame, end_frame) of `track_id`.
struct AnnotationRecord {
    std::string video_id;
    std::string date_tag;
    int track_id = 0;
    int start_frame = 0;
    int end_frame = 0;
    int label = 0;  // 1 rubbing hands, 0 other
    std::string action_name;
    bool synthetic = false;

    int length() const { return end_frame - start_frame; }
    /// Stable identifier used by split manifests and score logs.
    std::string id() const;
    void validate() const;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// `video_id,date_tag,track_id,start,end,label,action_name,synthetic` per line.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::vector<AnnotationRecord>& records, const std::filesystem::path& path);

struct AugmentConfig {
    double scale_min = 1.0;
    double scale_max = 1.75;
    double flip_prob = 0.5;
    double brightness_extent = 0.1;
    int input_size = 56;
    int pos_stride = 1;
    int neg_stride = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class SampleMode { Train, Eval };

/// Random choices for one clip. Drawn once and shared by the RGB and flow
/// views of the same window so both streams see the same crop.
struct AugmentDraw {
    double scale = 1.0;
    bool flip = false;
    double brightness = 0.0;
};

AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng);

/// T x H x W x C tensor, T = 16, H = W = input_size.
struct ClipSample {
    int frames = kClipFrames;
    int size = 0;
    int channels = 0;
    std::vector<float> data;
    int label = 0;
    std::string video_id;
    std::string date_tag;
    int start_frame = 0;

    float at(int t, int y, int x, int c) const {
        return data[((static_cast<std::size_t>(t) * size + y) * size + x) * channels + c];
    }
};

/// Start offsets (relative to the clip) of every 16-frame training window.
/// Positives use every start (stride pos_stride), negatives stride neg_stride.
std::vector<int> window_starts(int clip_len, int label, const AugmentConfig& cfg);

/// The crop region used for a window: the smoothed ROI at the start frame,
/// scaled by sqrt(scale) about its center so its area grows by `scale`.
BBox clip_region(const BBox& roi, double scale);

/// Cuts a 16-frame window starting at absolute frame `start`. The ROI is the
/// track's smoothed box at `start`, held fixed over the window.
ClipSample sample_clip(const FrameSequence& seq, const Track& track, int start, const AugmentConfig& cfg,
                       SampleMode mode, const AugmentDraw& draw);
ClipSample sample_clip(const FrameSequence& seq, const Track& track, int start, const AugmentConfig& cfg,
                       SampleMode mode, std::mt19937_64& rng);

/// Frames [first_frame, first_frame + seq.size()) of a full_width x
/// full_height video, cut to the integer rectangle whose top-left corner is
/// (x0, y0). Sampling from it matches sampling from the full video as long as
/// every requested crop lies inside the rectangle.
struct VideoRegion {
    FrameSequence seq;
    int first_frame = 0;
    int x0 = 0, y0 = 0;
    int full_width = 0, full_height = 0;
};

ClipSample sample_clip(const VideoRegion& video, const Track& track, int start, const AugmentConfig& cfg,
                       SampleMode mode, const AugmentDraw& draw);

/// Frames [first_frame, last_frame) cut to `box` (integer coordinates).
VideoRegion cut_region(const FrameSequence& seq, int first_frame, int last_frame, const BBox& box);

/// Integer rectangle covering clip_region(box, scale_max) for every smoothed
/// box of `track` in [first_frame, last_frame), clamped to the frame.
BBox sampling_bounds(const Track& track, int first_frame, int last_frame, double scale_max, int frame_w, int frame_h);

/// Independent generator per (seed, provenance, epoch).
std::mt19937_64 sample_rng(std::uint64_t seed, const std::string& video_id, int start, int epoch);

struct SplitResult {
    std::vector<AnnotationRecord> train, val, test;
    std::uint64_t seed = 0;
};

/// Date-disjoint split targeting the given frame ratios per class. Synthetic
/// records always go to train.
SplitResult split_dataset(const std::vector<AnnotationRecord>& records, std::array<int, 3> ratios = {10, 1, 1},
                          std::uint64_t seed = 0);

/// JSON manifest: {"seed": .., "train": [ids], "val": [..], "test": [..]}.
void save_split(const SplitResult& split, const std::filesystem::path& path);
SplitResult load_split(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);

}  // namespace hhm
