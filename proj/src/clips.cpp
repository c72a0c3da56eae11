// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/clips.hpp"

#include <fmt/core.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hhm {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string AnnotationRecord::id() const { return fmt::format("{}:{}:{}", video_id, track_id, start_frame); }

void AnnotationRecord::validate() const {
    if (end_frame - start_frame < 1)
        data_error(fmt::format("annotation {}: end frame {} must exceed start frame {}", id(), end_frame, start_frame));
    if (label != 0 && label != 1) data_error(fmt::format("annotation {}: label {} is not 0 or 1", id(), label));
    if (start_frame < 0) data_error(fmt::format("annotation {}: negative start frame", id()));
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) data_error(fmt::format("cannot open annotation file {}", path.string()));
    std::vector<AnnotationRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_csv(line);
        if (f.size() != 8) data_error(fmt::format("{}:{}: expected 8 fields, got {}", path.string(), line_no, f.size()));
        AnnotationRecord r;
        try {
            r.video_id = f[0];
            r.date_tag = f[1];
            r.track_id = std::stoi(f[2]);
            r.start_frame = std::stoi(f[3]);
            r.end_frame = std::stoi(f[4]);
            r.label = std::stoi(f[5]);
            r.action_name = f[6];
            if (f[7] != "0" && f[7] != "1") throw std::invalid_argument("synthetic flag");
            r.synthetic = f[7] == "1";
        } catch (const std::exception&) {
            data_error(fmt::format("{}:{}: malformed annotation record", path.string(), line_no));
        }
        r.validate();
        out.push_back(std::move(r));
    }
    return out;
}

void save_annotations(const std::vector<AnnotationRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) data_error(fmt::format("cannot write annotation file {}", path.string()));
    for (const AnnotationRecord& r : records) {
        r.validate();
        for (const std::string* s : {&r.video_id, &r.date_tag, &r.action_name})
            if (s->find(',') != std::string::npos || s->find('\n') != std::string::npos)
                data_error(fmt::format("annotation {}: field '{}' contains a separator", r.id(), *s));
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.video_id, r.date_tag, r.track_id, r.start_frame,
                           r.end_frame, r.label, r.action_name, r.synthetic ? 1 : 0);
    }
    if (!out) data_error(fmt::format("write failed: {}", path.string()));
}

void AugmentConfig::validate() const {
    if (!(scale_min >= 1.0 && scale_min <= scale_max)) config_error("augment: need 1 <= scale_min <= scale_max");
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) config_error("augment: flip_prob must lie in [0,1]");
    if (!(brightness_extent >= 0.0)) config_error("augment: brightness_extent must be >= 0");
    if (input_size < 1) config_error("augment: input_size must be >= 1");
    if (pos_stride < 1 || neg_stride < 1) config_error("augment: strides must be >= 1");
}

AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng) {
    AugmentDraw d;
    d.scale = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * uniform01(rng);
    d.flip = uniform01(rng) < cfg.flip_prob;
    d.brightness = cfg.brightness_extent * (2.0 * uniform01(rng) - 1.0);
    return d;
}

std::vector<int> window_starts(int clip_len, int label, const AugmentConfig& cfg) {
    std::vector<int> starts;
    if (clip_len < kClipFrames) {
        log(LogLevel::Debug, fmt::format("clip of {} frames is shorter than {}; skipped", clip_len, kClipFrames));
        return starts;
    }
    const int stride = label == 1 ? cfg.pos_stride : cfg.neg_stride;
    for (int s = 0; s + kClipFrames <= clip_len; s += stride) starts.push_back(s);
    return starts;
}

BBox clip_region(const BBox& roi, double scale) {
    if (scale == 1.0) return roi;
    const double k = std::sqrt(scale);
    const double hw = 0.5 * roi.width() * k, hh = 0.5 * roi.height() * k;
    return BBox{roi.cx() - hw, roi.cy() - hh, roi.cx() + hw, roi.cy() + hh};
}

std::mt19937_64 sample_rng(std::uint64_t seed, const std::string& video_id, int start, int epoch) {
    std::uint64_t s = mix_seed(seed, fnv1a(video_id));
    s = mix_seed(s, static_cast<std::uint64_t>(start));
    s = mix_seed(s, static_cast<std::uint64_t>(epoch));
    return std::mt19937_64(s);
}

namespace {

struct View {
    const FrameSequence& seq;
    int first_frame, x0, y0, full_w, full_h;
};

ClipSample sample_view(const View& v, const Track& track, int start, const AugmentConfig& cfg, SampleMode mode,
                       const AugmentDraw& draw) {
    const BBox* roi = track.smoothed_at(start);
    if (!roi) data_error(fmt::format("track {} has no box at start frame {}", track.track_id, start));
    const int local = start - v.first_frame;
    if (local < 0 || local + kClipFrames > static_cast<int>(v.seq.size()))
        data_error(fmt::format("window [{}, {}) exceeds frames [{}, {}) of '{}'", start, start + kClipFrames,
                               v.first_frame, v.first_frame + v.seq.size(), v.seq.video_id));
    const bool train = mode == SampleMode::Train;
    const BBox region = clip_region(*roi, train ? draw.scale : 1.0);
    const int x1 = std::max(0, static_cast<int>(std::floor(region.x1)));
    const int y1 = std::max(0, static_cast<int>(std::floor(region.y1)));
    const int x2 = std::min(v.full_w, static_cast<int>(std::ceil(region.x2)));
    const int y2 = std::min(v.full_h, static_cast<int>(std::ceil(region.y2)));
    if (x2 <= x1 || y2 <= y1)
        data_error(fmt::format("crop box ({},{},{},{}) does not intersect the {}x{} frame", region.x1, region.y1,
                               region.x2, region.y2, v.full_w, v.full_h));
    const BBox local_box{double(x1 - v.x0), double(y1 - v.y0), double(x2 - v.x0), double(y2 - v.y0)};
    if (local_box.x1 < 0 || local_box.y1 < 0 || local_box.x2 > v.seq.width() || local_box.y2 > v.seq.height())
        data_error(fmt::format("crop ({},{},{},{}) of '{}' leaves the stored region", x1, y1, x2, y2, v.seq.video_id));

    ClipSample out;
    out.size = cfg.input_size;
    out.channels = v.seq.channels();
    out.video_id = v.seq.video_id;
    out.date_tag = v.seq.date_tag;
    out.start_frame = start;
    const std::size_t per_frame = static_cast<std::size_t>(out.size) * out.size * out.channels;
    out.data.resize(per_frame * kClipFrames);
    for (int t = 0; t < kClipFrames; ++t) {
        Frame f = resize_and_center_crop(crop(v.seq.frames[local + t], local_box), cfg.input_size);
        if (train && draw.flip) f = hflip(f);
        if (train && draw.brightness != 0.0 && f.channels == 3) f = adjust_brightness(f, static_cast<float>(draw.brightness));
        std::copy(f.data.begin(), f.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(t * per_frame));
    }
    return out;
}

}  // namespace

ClipSample sample_clip(const FrameSequence& seq, const Track& track, int start, const AugmentConfig& cfg,
                       SampleMode mode, const AugmentDraw& draw) {
    return sample_view({seq, 0, 0, 0, seq.width(), seq.height()}, track, start, cfg, mode, draw);
}

ClipSample sample_clip(const VideoRegion& video, const Track& track, int start, const AugmentConfig& cfg,
                       SampleMode mode, const AugmentDraw& draw) {
    return sample_view({video.seq, video.first_frame, video.x0, video.y0, video.full_width, video.full_height}, track,
                       start, cfg, mode, draw);
}

VideoRegion cut_region(const FrameSequence& seq, int first_frame, int last_frame, const BBox& box) {
    if (first_frame < 0 || last_frame > static_cast<int>(seq.size()) || last_frame <= first_frame)
        data_error(fmt::format("cut_region: frames [{}, {}) outside the {} frames of '{}'", first_frame, last_frame,
                               seq.size(), seq.video_id));
    VideoRegion r;
    r.first_frame = first_frame;
    r.full_width = seq.width();
    r.full_height = seq.height();
    r.x0 = std::max(0, static_cast<int>(std::floor(box.x1)));
    r.y0 = std::max(0, static_cast<int>(std::floor(box.y1)));
    r.seq.fps = seq.fps;
    r.seq.video_id = seq.video_id;
    r.seq.date_tag = seq.date_tag;
    for (int i = first_frame; i < last_frame; ++i) r.seq.frames.push_back(crop(seq.frames[i], box));
    return r;
}

BBox sampling_bounds(const Track& track, int first_frame, int last_frame, double scale_max, int frame_w, int frame_h) {
    bool any = false;
    BBox u{};
    for (const TrackEntry& e : track.smoothed) {
        if (e.frame_index < first_frame || e.frame_index >= last_frame) continue;
        const BBox r = clip_region(e.box, scale_max);
        if (!any) u = r;
        u = {std::min(u.x1, r.x1), std::min(u.y1, r.y1), std::max(u.x2, r.x2), std::max(u.y2, r.y2)};
        any = true;
    }
    if (!any) data_error(fmt::format("track {} has no box in frames [{}, {})", track.track_id, first_frame, last_frame));
    const double x1 = std::max(0.0, std::floor(u.x1)), y1 = std::max(0.0, std::floor(u.y1));
    const double x2 = std::min(double(frame_w), std::ceil(u.x2)), y2 = std::min(double(frame_h), std::ceil(u.y2));
    if (x2 <= x1 || y2 <= y1) data_error(fmt::format("track {} lies outside the frame", track.track_id));
    return {x1, y1, x2, y2};
}

ClipSample sample_clip(const FrameSequence& seq, const Track& track, int start, const AugmentConfig& cfg,
                       SampleMode mode, std::mt19937_64& rng) {
    AugmentDraw draw;
    if (mode == SampleMode::Train) draw = draw_augment(cfg, rng);
    return sample_clip(seq, track, start, cfg, mode, draw);
}

SplitResult split_dataset(const std::vector<AnnotationRecord>& records, std::array<int, 3> ratios,
                          std::uint64_t seed) {
    if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0) config_error("split ratios must be positive");
    SplitResult out;
    out.seed = seed;

    struct DateInfo {
        std::string tag;
        std::array<double, 2> frames{0, 0};
    };
    std::map<std::string, DateInfo> dates;
    std::array<double, 2> totals{0, 0};
    for (const AnnotationRecord& r : records) {
        if (r.synthetic) continue;
        DateInfo& d = dates[r.date_tag];
        d.tag = r.date_tag;
        d.frames[r.label] += r.length();
        totals[r.label] += r.length();
    }
    if (dates.size() < 3)
        data_error(fmt::format("split needs at least 3 distinct recording dates, found {}", dates.size()));

    std::vector<const DateInfo*> base;
    for (const auto& [tag, d] : dates) base.push_back(&d);
    std::stable_sort(base.begin(), base.end(), [](const DateInfo* a, const DateInfo* b) {
        return a->frames[0] + a->frames[1] > b->frames[0] + b->frames[1];
    });

    const double ratio_sum = ratios[0] + ratios[1] + ratios[2];
    std::array<double, 3> target_frac{};
    for (int s = 0; s < 3; ++s) target_frac[s] = ratios[s] / ratio_sum;

    auto assign = [&](const std::vector<const DateInfo*>& order) {
        std::map<std::string, int> where;
        std::array<std::array<double, 2>, 3> cur{};
        for (const DateInfo* d : order) {
            int best = 0;
            double best_deficit = -1e300;
            for (int s = 0; s < 3; ++s) {
                double deficit = 0;
                for (int c = 0; c < 2; ++c)
                    if (totals[c] > 0) deficit += target_frac[s] - cur[s][c] / totals[c];
                if (deficit > best_deficit + 1e-12) {
                    best_deficit = deficit;
                    best = s;
                }
            }
            where[d->tag] = best;
            for (int c = 0; c < 2; ++c) cur[best][c] += d->frames[c];
        }
        double score = 0;
        for (int s = 0; s < 3; ++s) {
            bool any = false;
            for (int c = 0; c < 2; ++c) {
                if (totals[c] <= 0) continue;
                const double frac = cur[s][c] / totals[c];
                score += (frac - target_frac[s]) * (frac - target_frac[s]);
                if (cur[s][c] > 0)
                    any = true;
                else
                    score += 1.0;
            }
            if (!any) score += 10.0;
        }
        return std::pair{score, where};
    };

    auto [best_score, best_where] = assign(base);
    std::mt19937_64 rng(mix_seed(seed, 0x5917));
    for (int trial = 1; trial < 64; ++trial) {
        std::vector<const DateInfo*> order = base;
        std::shuffle(order.begin(), order.end(), rng);
        auto [score, where] = assign(order);
        if (score < best_score - 1e-12) {
            best_score = score;
            best_where = std::move(where);
        }
    }

    for (const AnnotationRecord& r : records) {
        if (r.synthetic) {
            out.train.push_back(r);
            continue;
        }
        switch (best_where.at(r.date_tag)) {
            case 0: out.train.push_back(r); break;
            case 1: out.val.push_back(r); break;
            default: out.test.push_back(r); break;
        }
    }
    return out;
}

void save_split(const SplitResult& split, const std::filesystem::path& path) {
    auto ids = [](const std::vector<AnnotationRecord>& v) {
        std::vector<std::string> out;
        for (const auto& r : v) out.push_back(r.id());
        return out;
    };
    nlohmann::json j = {{"seed", split.seed}, {"train", ids(split.train)}, {"val", ids(split.val)}, {"test", ids(split.test)}};
    std::ofstream out(path);
    if (!out) data_error(fmt::format("cannot write split manifest {}", path.string()));
    out << j.dump(2) << '\n';
}

SplitResult load_split(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
    std::ifstream in(path);
    if (!in) data_error(fmt::format("cannot open split manifest {}", path.string()));
    std::map<std::string, const AnnotationRecord*> by_id;
    for (const auto& r : records) by_id[r.id()] = &r;
    SplitResult out;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        out.seed = j.at("seed").get<std::uint64_t>();
        auto fill = [&](const char* key, std::vector<AnnotationRecord>& dst) {
            for (const auto& id : j.at(key)) {
                auto it = by_id.find(id.get<std::string>());
                if (it == by_id.end()) data_error(fmt::format("split manifest references unknown record {}", id.dump()));
                dst.push_back(*it->second);
            }
        };
        fill("train", out.train);
        fill("val", out.val);
        fill("test", out.test);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        data_error(fmt::format("{}: malformed split manifest: {}", path.string(), e.what()));
    }
    return out;
}

}  // namespace hhm
