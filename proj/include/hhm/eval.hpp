// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hhm {

inline constexpr double kDecisionThreshold = 0.5;

inline int predict_label(double score, double threshold = kDecisionThreshold) { return score >= threshold ? 1 : 0; }

struct ConfusionMatrix {
    long tp = 0, fp = 0, fn = 0, tn = 0;

    long total() const { return tp + fp + fn + tn; }
    void add(int label, int prediction);

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Ratios with a zero denominator are left empty rather than reported as 0.
struct Metrics {
    double accuracy = 0;
    std::optional<double> precision, recall, f1;
};

/// Throws on an empty matrix.
Metrics metrics(const ConfusionMatrix& cm);

/// F1 from given precision and recall; empty when both are 0.
std::optional<double> f1_score(double precision, double recall);

enum class EvalMode { PerClip, PerWindow };

const char* eval_mode_name(EvalMode m);
EvalMode parse_eval_mode(const std::string& s);

/// One annotated test clip with the absolute start frames of its windows.
/// The first start is the clip's own start frame.
struct EvalItem {
    std::string clip_id;
    int label = 0;
    std::vector<int> starts;
};

using WindowScorer = std::function<double(std::size_t item, int start)>;

/// Score per item: the first window's score (PerClip) or the mean over all
/// windows (PerWindow). Items are scored in parallel; output order follows
/// the input.
std::vector<double> score_items(const std::vector<EvalItem>& items, EvalMode mode, const WindowScorer& scorer);

/// One line of the per-clip score log.
struct ScoreRecord {
    std::string clip_id;
    int label = 0;
    std::optional<double> rgb, flow;
    std::optional<double> fused;
    int prediction = 0;

    /// The score the prediction was made from: fused, else rgb, else flow.
    std::optional<double> headline() const;
};

/// Pairs per-stream scores by clip. Either stream may be absent; when both
/// are present their ids and labels must agree position by position.
std::vector<ScoreRecord> combine_scores(const std::vector<EvalItem>& items, const std::vector<double>* rgb,
                                        const std::vector<double>* flow, double threshold = kDecisionThreshold);

enum class Stream { Rgb, Flow, Fused };

/// Recount from the log for one stream; nullopt when that stream is absent.
std::optional<ConfusionMatrix> confusion(const std::vector<ScoreRecord>& log, Stream stream,
                                         double threshold = kDecisionThreshold);

/// `clip_id label score_rgb score_flow score_fused prediction`, NA for absent.
void save_score_log(const std::vector<ScoreRecord>& log, const std::filesystem::path& path);
std::vector<ScoreRecord> load_score_log(const std::filesystem::path& path);

struct AblationRow {
    std::string model;
    bool present = false;
    Metrics metrics;
    std::optional<ConfusionMatrix> cm;
};

struct TransferComparison {
    double transfer_accuracy = 0;
    double scratch_accuracy = 0;
    long clips = 0;
};

struct AblationReport {
    /// Always three rows: RGB, Flow, RGB+Flow.
    std::vector<AblationRow> rows;
    std::string dataset_hash;
    std::uint64_t seed = 0;
    std::string mode;
    std::string config_json;
    std::optional<TransferComparison> transfer;
};

inline constexpr std::array<const char*, 3> kAblationModels{"I3D (RGB)", "I3D (Flow)", "I3D (RGB+Flow)"};

/// Builds the three rows from a combined score log.
AblationReport make_ablation(const std::vector<ScoreRecord>& log, double threshold = kDecisionThreshold);

/// The aligned metrics table only.
std::string render_table(const std::vector<AblationRow>& rows);
/// Metadata, table, confusion counts and the transfer comparison.
std::string render_text(const AblationReport& report);
std::string render_json(const AblationReport& report);

/// Accuracy/precision/recall/F1 of one stream at thresholds 0.05..0.95.
std::string render_threshold_sweep(const std::vector<ScoreRecord>& log);

}  // namespace hhm
