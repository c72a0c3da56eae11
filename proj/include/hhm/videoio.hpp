// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hhm/common.hpp"

namespace hhm {

/// Dense image with 1 (gray), 2 (flow dx,dy) or 3 (RGB) interleaved channels.
/// RGB and gray values live in [0,1]; flow values are unbounded.
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Frame() = default;
    Frame(int w, int h, int c, float fill = 0.0f);

    float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    /// Throws when the buffer size disagrees with the declared shape.
    void validate() const;

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameSequence {
    std::vector<Frame> frames;
    double fps = 15.0;
    std::string video_id;
    std::string date_tag;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    int channels() const { return frames.empty() ? 0 : frames.front().channels; }

    /// Checks shared dimensions and fps > 0.
    void validate() const;
};

inline constexpr int kDefaultWidth = 640;
inline constexpr int kDefaultHeight = 480;
inline constexpr double kDefaultFps = 15.0;

// Single-frame codecs. RGB is binary P6, gray binary P5, flow the planar
// little-endian "FLO2" container.
Frame read_pnm(const std::filesystem::path& path);
void write_pnm(const Frame& frame, const std::filesystem::path& path);
Frame read_flo2(const std::filesystem::path& path);
void write_flo2(const Frame& frame, const std::filesystem::path& path);

/// Name of frame `index` inside a sequence directory for a given channel count.
std::string frame_file_name(int index, int channels);

/// Contents of a frame directory's `meta.json`.
struct SequenceMeta {
    int width = 0;
    int height = 0;
    int channels = 3;
    double fps = kDefaultFps;
    std::string video_id;
    std::string date_tag;
};

SequenceMeta read_meta(const std::filesystem::path& dir);

/// Loads `meta.json` plus contiguous `frame_NNNNNN.*` files.
FrameSequence load_sequence(const std::filesystem::path& dir);
void save_sequence(const FrameSequence& seq, const std::filesystem::path& dir);

/// Copies the part of `box` (rounded outward to whole pixels) that lies inside
/// the frame. Throws when that intersection is empty.
Frame crop(const Frame& frame, const BBox& box);

/// Corner-aligned bilinear resampling: output corners sample input corners.
Frame resize_bilinear(const Frame& frame, int out_w, int out_h);

/// Mirrors columns. Two-channel frames also negate the horizontal component.
Frame hflip(const Frame& frame);

/// v -> clamp(v + delta, 0, 1) on every channel.
Frame adjust_brightness(const Frame& frame, float delta);

/// Luminance 0.299 R + 0.587 G + 0.114 B; gray input is returned unchanged.
Frame to_grayscale(const Frame& frame);

/// Scales the shorter side to `size` then takes the centered size x size window.
Frame resize_and_center_crop(const Frame& frame, int size);

}  // namespace hhm
