// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hhm/common.hpp"
#include "hhm/pose_roi.hpp"

namespace hhm {

struct TrackEntry {
    int frame_index = 0;
    BBox box;

    friend bool operator==(const TrackEntry&, const TrackEntry&) = default;
};

/// One person's ROIs over time. `smoothed` mirrors `entries` index for index.
struct Track {
    int track_id = 0;
    std::vector<TrackEntry> entries;
    std::vector<TrackEntry> smoothed;

    int first_frame() const { return entries.empty() ? -1 : entries.front().frame_index; }
    int last_frame() const { return entries.empty() ? -1 : entries.back().frame_index; }
    /// Smoothed box at `frame_index`, or nullptr when the track has no entry there.
    const BBox* smoothed_at(int frame_index) const;
    const BBox* raw_at(int frame_index) const;

    /// Strictly increasing frame indices and a smoothed list aligned with the raw one.
    void validate() const;

    friend bool operator==(const Track&, const Track&) = default;
};

struct LinkParams {
    /// Minimum IoU for continuing a track; below it a detection starts a new track.
    double tau_new = 0.1;
    /// Tracks whose last entry is more than this many frames old are closed.
    int max_gap = 8;
};

/// Tracker state carried across frames.
struct LinkState {
    std::vector<Track> tracks;
    std::vector<bool> closed;
    int next_id = 0;
};

double iou(const BBox& a, const BBox& b);

/// Greedy highest-IoU-first assignment of `detections` to the open tracks.
/// Ties go to the lower track id, then the lower detection index. Returns the
/// track id each detection was given.
std::vector<int> link_step(LinkState& state, std::span<const BBox> detections, int frame_index,
                           const LinkParams& params);

/// Runs ROI extraction and link_step over every frame of a keypoint stream.
/// Returned tracks are unsmoothed (smoothed == entries).
std::vector<Track> link_poses(const std::vector<PoseFrame>& poses, const RoiParams& roi, const LinkParams& link,
                              int frame_w, int frame_h);

/// Trailing moving average with warm-up: entry n averages entries
/// max(0, n-L+1)..n, coordinate-wise.
Track smooth_track(const Track& track, int window);

struct TrackEdit {
    enum class Kind { Move, Split, Merge };
    Kind kind = Kind::Move;
    /// move: frame, from, to. split: track `from` at frame. merge: `to` absorbs `from`.
    int frame = -1;
    int from = -1;
    int to = -1;
    int line = 0;
};

/// Correction file, one edit per line:
///   move <frame> <from_track> <to_track>
///   split <track> <frame>
///   merge <into_track> <from_track>
std::vector<TrackEdit> load_corrections(const std::filesystem::path& path);
std::vector<TrackEdit> parse_corrections(const std::string& text);

/// Applies edits in order. Smoothed lists are reset to the raw entries; callers
/// smooth afterwards.
std::vector<Track> correct_assignment(std::vector<Track> tracks, const std::vector<TrackEdit>& edits);

/// `track_id frame x1 y1 x2 y2 sx1 sy1 sx2 sy2` per entry.
void save_tracks(const std::vector<Track>& tracks, const std::filesystem::path& path);
std::vector<Track> load_tracks(const std::filesystem::path& path);

}  // namespace hhm
