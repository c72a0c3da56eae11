// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/eval.hpp"

#include <fmt/core.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hhm/common.hpp"
#include "hhm/net.hpp"
#include "json.hpp"

namespace hhm {

void ConfusionMatrix::add(int label, int prediction) {
    if (label == 1)
        ++(prediction == 1 ? tp : fn);
    else
        ++(prediction == 1 ? fp : tn);
}

std::optional<double> f1_score(double precision, double recall) {
    if (precision + recall == 0) return std::nullopt;
    return 2 * precision * recall / (precision + recall);
}

Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.tp < 0 || cm.fp < 0 || cm.fn < 0 || cm.tn < 0) data_error("metrics: negative count");
    if (cm.total() == 0) data_error("metrics: empty confusion matrix");
    Metrics m;
    m.accuracy = double(cm.tp + cm.tn) / double(cm.total());
    if (cm.tp + cm.fp > 0) m.precision = double(cm.tp) / double(cm.tp + cm.fp);
    if (cm.tp + cm.fn > 0) m.recall = double(cm.tp) / double(cm.tp + cm.fn);
    if (m.precision && m.recall) m.f1 = f1_score(*m.precision, *m.recall);
    return m;
}

const char* eval_mode_name(EvalMode m) { return m == EvalMode::PerClip ? "per-clip" : "per-window"; }

EvalMode parse_eval_mode(const std::string& s) {
    if (s == "per-clip") return EvalMode::PerClip;
    if (s == "per-window") return EvalMode::PerWindow;
    config_error(fmt::format("unknown eval mode '{}' (per-clip|per-window)", s));
}

std::vector<double> score_items(const std::vector<EvalItem>& items, EvalMode mode, const WindowScorer& scorer) {
    if (items.empty()) data_error("evaluate: no test clips");
    std::vector<double> scores(items.size());
    parallel_for(items.size(), [&](std::size_t i) {
        const EvalItem& it = items[i];
        if (it.starts.empty()) data_error(fmt::format("evaluate: clip {} has no window", it.clip_id));
        if (mode == EvalMode::PerClip) {
            scores[i] = scorer(i, it.starts.front());
            return;
        }
        double acc = 0;
        for (int s : it.starts) acc += scorer(i, s);
        scores[i] = acc / static_cast<double>(it.starts.size());
    });
    return scores;
}

std::optional<double> ScoreRecord::headline() const {
    if (fused) return fused;
    if (rgb) return rgb;
    return flow;
}

std::vector<ScoreRecord> combine_scores(const std::vector<EvalItem>& items, const std::vector<double>* rgb,
                                        const std::vector<double>* flow, double threshold) {
    for (const auto* s : {rgb, flow})
        if (s && s->size() != items.size())
            data_error(fmt::format("score pairing: {} scores for {} clips", s->size(), items.size()));
    std::vector<ScoreRecord> log;
    for (std::size_t i = 0; i < items.size(); ++i) {
        ScoreRecord r;
        r.clip_id = items[i].clip_id;
        r.label = items[i].label;
        if (rgb) r.rgb = (*rgb)[i];
        if (flow) r.flow = (*flow)[i];
        if (r.rgb && r.flow) r.fused = fuse_two_stream(*r.rgb, *r.flow);
        auto h = r.headline();
        r.prediction = h ? predict_label(*h, threshold) : 0;
        log.push_back(std::move(r));
    }
    return log;
}

std::optional<ConfusionMatrix> confusion(const std::vector<ScoreRecord>& log, Stream stream, double threshold) {
    ConfusionMatrix cm;
    for (const ScoreRecord& r : log) {
        const std::optional<double>& s = stream == Stream::Rgb ? r.rgb : stream == Stream::Flow ? r.flow : r.fused;
        if (!s) return std::nullopt;
        cm.add(r.label, predict_label(*s, threshold));
    }
    if (log.empty()) return std::nullopt;
    return cm;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "NA"; }

std::optional<double> parse_opt(const std::string& tok, const std::filesystem::path& path, int line) {
    if (tok == "NA") return std::nullopt;
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        data_error(fmt::format("{}:{}: bad score '{}'", path.string(), line, tok));
    return v;
}

}  // namespace

void save_score_log(const std::vector<ScoreRecord>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) data_error(fmt::format("cannot write {}", path.string()));
    for (const ScoreRecord& r : log)
        out << fmt::format("{} {} {} {} {} {}\n", r.clip_id, r.label, fmt_opt(r.rgb), fmt_opt(r.flow), fmt_opt(r.fused),
                           r.prediction);
    if (!out) data_error(fmt::format("write failed: {}", path.string()));
}

std::vector<ScoreRecord> load_score_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) data_error(fmt::format("cannot open score log {}", path.string()));
    std::vector<ScoreRecord> log;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id, label, rgb, flow, fused, pred, extra;
        if (!(ss >> id >> label >> rgb >> flow >> fused >> pred) || (ss >> extra) || (label != "0" && label != "1") ||
            (pred != "0" && pred != "1"))
            data_error(fmt::format("{}:{}: malformed score line", path.string(), n));
        log.push_back({id, label == "1", parse_opt(rgb, path, n), parse_opt(flow, path, n), parse_opt(fused, path, n),
                       pred == "1"});
    }
    return log;
}

AblationReport make_ablation(const std::vector<ScoreRecord>& log, double threshold) {
    AblationReport rep;
    const Stream streams[3] = {Stream::Rgb, Stream::Flow, Stream::Fused};
    for (int i = 0; i < 3; ++i) {
        AblationRow row;
        row.model = kAblationModels[i];
        row.cm = confusion(log, streams[i], threshold);
        if (row.cm) {
            row.present = true;
            row.metrics = metrics(*row.cm);
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "undef"; }

}  // namespace

std::string render_table(const std::vector<AblationRow>& rows) {
    std::string out = fmt::format("{:<16}{:>10}{:>11}{:>8}{:>10}\n", "Model", "Accuracy", "Precision", "Recall",
                                  "F1 score");
    out += std::string(55, '-') + "\n";
    for (const AblationRow& r : rows) {
        if (!r.present) {
            out += fmt::format("{:<16}{:>10}{:>11}{:>8}{:>10}\n", r.model, "absent", "absent", "absent", "absent");
            continue;
        }
        out += fmt::format("{:<16}{:>10}{:>11}{:>8}{:>10}\n", r.model, cell(r.metrics.accuracy),
                           cell(r.metrics.precision), cell(r.metrics.recall), cell(r.metrics.f1));
    }
    out += std::string(55, '-') + "\n";
    return out;
}

std::string render_text(const AblationReport& rep) {
    std::string out = fmt::format("dataset {}  seed {}  mode {}\n\n", rep.dataset_hash, rep.seed, rep.mode);
    out += render_table(rep.rows);
    out += "\nconfusion counts (tp fp fn tn)\n";
    for (const AblationRow& r : rep.rows) {
        if (r.cm)
            out += fmt::format("  {:<16}{} {} {} {}\n", r.model, r.cm->tp, r.cm->fp, r.cm->fn, r.cm->tn);
        else
            out += fmt::format("  {:<16}absent\n", r.model);
    }
    if (rep.transfer) {
        const auto& t = *rep.transfer;
        out += fmt::format("\ntransfer vs scratch head (RGB, {} clips)\n", t.clips);
        out += fmt::format("  inflated pretrained, frozen  accuracy {:.4f}\n", t.transfer_accuracy);
        out += fmt::format("  random backbone, frozen      accuracy {:.4f}\n", t.scratch_accuracy);
        out += fmt::format("  difference                   {:+.4f}\n", t.transfer_accuracy - t.scratch_accuracy);
    }
    return out;
}

std::string render_json(const AblationReport& rep) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json rows = json::array();
    for (const AblationRow& r : rep.rows) {
        json j{{"model", r.model}, {"present", r.present}};
        if (r.present) {
            j["accuracy"] = r.metrics.accuracy;
            j["precision"] = opt(r.metrics.precision);
            j["recall"] = opt(r.metrics.recall);
            j["f1"] = opt(r.metrics.f1);
        }
        if (r.cm) j["confusion"] = {{"tp", r.cm->tp}, {"fp", r.cm->fp}, {"fn", r.cm->fn}, {"tn", r.cm->tn}};
        rows.push_back(j);
    }
    json j{{"dataset_hash", rep.dataset_hash}, {"seed", rep.seed}, {"mode", rep.mode}, {"rows", rows}};
    j["config"] = rep.config_json.empty() ? json(nullptr) : json::parse(rep.config_json);
    if (rep.transfer)
        j["transfer"] = {{"transfer_accuracy", rep.transfer->transfer_accuracy},
                         {"scratch_accuracy", rep.transfer->scratch_accuracy},
                         {"clips", rep.transfer->clips}};
    return j.dump(2) + "\n";
}

std::string render_threshold_sweep(const std::vector<ScoreRecord>& log) {
    std::string out = fmt::format("{:<8}{:<10}{:>10}{:>11}{:>8}{:>10}\n", "stream", "threshold", "accuracy",
                                  "precision", "recall", "f1");
    const std::pair<Stream, const char*> streams[3] = {{Stream::Rgb, "rgb"}, {Stream::Flow, "flow"},
                                                       {Stream::Fused, "fused"}};
    for (const auto& [s, name] : streams) {
        if (!confusion(log, s)) continue;
        for (int k = 1; k <= 19; ++k) {
            const double th = 0.05 * k;
            Metrics m = metrics(*confusion(log, s, th));
            out += fmt::format("{:<8}{:<10.2f}{:>10}{:>11}{:>8}{:>10}\n", name, th, cell(m.accuracy), cell(m.precision),
                               cell(m.recall), cell(m.f1));
        }
    }
    return out;
}

}  // namespace hhm
