// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hhm/clips.hpp"
#include "hhm/eval.hpp"
#include "hhm/flow.hpp"
#include "hhm/linker.hpp"
#include "hhm/net.hpp"
#include "hhm/pose_roi.hpp"
#include "hhm/synthgen.hpp"
#include "hhm/train.hpp"

namespace hhm {

/// Output roots of the stages. Relative paths resolve against the working
/// directory of the process.
struct PipelinePaths {
    std::filesystem::path dataset = "hhm_run/dataset";
    std::filesystem::path prepared = "hhm_run/prepared";
    std::filesystem::path checkpoints = "hhm_run/checkpoints";
    std::filesystem::path reports = "hhm_run/reports";
};

/// Synthetic dataset shape for `gen`.
struct GenConfig {
    int rubbing = 100;
    int other = 100;
    int dates = 12;
    int width = 160;
    int height = 120;
    double fps = 15.0;
    int n_persons = 2;
    double keypoint_dropout = 0.0;
    int min_frames = 18;
    int max_frames = 30;

    DatasetConfig dataset_config(std::uint64_t seed) const;
};

/// Fully resolved configuration of every stage. Module seeds are not part of
/// it: they are derived from `seed`.
struct PipelineConfig {
    std::uint64_t seed = 0;
    PipelinePaths paths;
    GenConfig gen;
    RoiParams roi;
    LinkParams link;
    int smoothing_window = 4;
    AugmentConfig augment;
    std::array<int, 3> split_ratios{10, 1, 1};
    TvL1Params flow;
    double flow_cap = 20.0;
    /// RGB network; the flow network is the same with two input channels.
    NetSpec net = NetSpec::i3d_mini();
    TrainConfig train;
    PretrainConfig pretrain;
    EvalMode eval_mode = EvalMode::PerClip;
    /// Also train the random-backbone baseline next to the RGB stream.
    bool scratch_baseline = true;

    void validate() const;
    std::string to_json() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    static PipelineConfig from_json(const std::string& text);
    static PipelineConfig load(const std::filesystem::path& path);

    /// Network spec for one stream (Rgb or Flow).
    NetSpec stream_spec(Stream stream) const;
    /// Training settings with the stream's derived seed filled in.
    TrainConfig stream_train(Stream stream) const;
    PretrainConfig resolved_pretrain() const;
};

const char* stream_name(Stream s);
Stream parse_stream(const std::string& s);

/// Holds an exclusive advisory lock on `<dir>/.hhm.lock` for its lifetime.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    int fd_ = -1;
};

/// Per-split clip/frame and window/frame counts by class, laid out like the
/// dataset statistics table: `clips(frames)` without augmentation and
/// `windows(window frames)` with it.
std::string dataset_statistics(const SplitResult& split, const AugmentConfig& augment);

/// Directory name of a record's flow cache.
std::string record_dir_name(const AnnotationRecord& r);

/// Generates the synthetic dataset. A non-empty dataset root is an error
/// unless `force`, which clears it first.
void run_gen(const PipelineConfig& cfg, bool force, std::ostream& out);

/// ROI extraction, linking, corrections, smoothing, windowing and the split.
void run_prepare(const PipelineConfig& cfg, std::ostream& out);

/// TV-L1 flow for every prepared record, cut to the region the sampler can reach.
void run_flow(const PipelineConfig& cfg, std::ostream& out);

/// Pretrains (or reuses) the 2D twin, inflates it and fine-tunes the head of
/// one stream. The RGB stream also trains the scratch baseline when enabled.
void run_train(const PipelineConfig& cfg, Stream stream, std::ostream& out);

/// Scores the test split with every available checkpoint and writes the
/// ablation report, score log and threshold sweep.
AblationReport run_eval(const PipelineConfig& cfg, std::ostream& out);

struct InferTrack {
    int track_id = -1;
    std::optional<double> rgb, flow, fused;
    double score = 0;
};

struct InferResult {
    std::vector<InferTrack> tracks;
    double score = 0;
    int label = 0;
};

/// Scores the 16-frame window at `start` of a frame directory. People come
/// from a keypoints.txt next to the frames (or one level up); without one the
/// whole frame is scored. The result is the highest score over people.
InferResult run_infer(const PipelineConfig& cfg, const std::filesystem::path& clip_dir, int start, std::ostream& out);

}  // namespace hhm
