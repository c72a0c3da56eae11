// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/synthgen.hpp"

#include <fmt/core.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "json.hpp"

namespace fs = std::filesystem;

namespace hhm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kUpperArm = 1.5;
constexpr double kForearm = 1.4;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

struct Vec2 {
    double x, y;
};

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

// Two-link inverse kinematics; the elbow bends away from the body midline.
Vec2 solve_elbow(Vec2 shoulder, Vec2 wrist, double l1, double l2, double body_x, int outward) {
    Vec2 d = wrist - shoulder;
    double len = std::hypot(d.x, d.y);
    if (len < 1e-9) return shoulder + Vec2{outward * l1, 0};
    const double lo = std::abs(l1 - l2) + 1e-6, hi = l1 + l2 - 1e-6;
    const double dist = std::clamp(len, lo, hi);
    Vec2 dir = (1.0 / len) * d;
    const double a = (l1 * l1 - l2 * l2 + dist * dist) / (2 * dist);
    const double h = std::sqrt(std::max(0.0, l1 * l1 - a * a));
    Vec2 base = shoulder + a * dir;
    Vec2 perp{-dir.y, dir.x};
    Vec2 e1 = base + h * perp, e2 = base - h * perp;
    return outward * (e1.x - body_x) >= outward * (e2.x - body_x) ? e1 : e2;
}

struct Background {
    std::vector<float> px;  // RGB
};

Background make_background(std::uint64_t seed, int w, int h) {
    std::mt19937_64 rng(mix_seed(seed, 0xb6));
    Background bg;
    bg.px.resize(std::size_t(w) * h * 3);
    std::array<double, 3> base{uniform(rng, 0.30, 0.42), uniform(rng, 0.40, 0.52), uniform(rng, 0.44, 0.56)};
    struct Wave {
        double fx, fy, phase, amp;
        int channel;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < 8; ++k)
        waves.push_back({uniform(rng, -4, 4), uniform(rng, -3, 3), uniform(rng, 0, kTwoPi), uniform(rng, 0.02, 0.05),
                         static_cast<int>(rng() % 3)});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double nx = double(x) / w, ny = double(y) / h;
            std::array<double, 3> c = base;
            for (const Wave& wv : waves) {
                const double s = wv.amp * std::sin(kTwoPi * (wv.fx * nx + wv.fy * ny) + wv.phase);
                c[wv.channel] += s;
                c[(wv.channel + 1) % 3] += 0.5 * s;
            }
            const double grain = (static_cast<double>(mix_seed(seed, std::uint64_t(y) * w + x) >> 11) * 0x1.0p-53 - 0.5) * 0.04;
            for (int ch = 0; ch < 3; ++ch)
                bg.px[(std::size_t(y) * w + x) * 3 + ch] = static_cast<float>(std::clamp(c[ch] + grain, 0.0, 1.0));
        }
    return bg;
}

void blend(Frame& f, int x, int y, const std::array<float, 3>& color, float coverage) {
    if (coverage <= 0.0f) return;
    coverage = std::min(coverage, 1.0f);
    for (int c = 0; c < 3; ++c) {
        float& v = f.at(x, y, c);
        v += (color[c] - v) * coverage;
    }
}

// Anti-aliased capsule of the given radius around segment a-b.
void draw_segment(Frame& f, Vec2 a, Vec2 b, double radius, const std::array<float, 3>& color) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius - 1)));
    const int x1 = std::min(f.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius - 1)));
    const int y1 = std::min(f.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius + 1)));
    const Vec2 d = b - a;
    const double len2 = d.x * d.x + d.y * d.y;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const Vec2 p{x + 0.0, y + 0.0};
            double t = len2 > 0 ? ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const Vec2 q = a + t * d;
            const double dist = std::hypot(p.x - q.x, p.y - q.y);
            blend(f, x, y, color, static_cast<float>(radius + 0.5 - dist));
        }
}

void draw_disk(Frame& f, Vec2 c, double radius, const std::array<float, 3>& color) {
    draw_segment(f, c, c, radius, color);
}

void draw_person(Frame& f, const Skeleton& s, const std::array<float, 3>& color, double u) {
    auto P = [&](int j) { return Vec2{s[j].x, s[j].y}; };
    const std::array<float, 3> skin{0.93f, 0.78f, 0.64f};
    const std::array<float, 3> legs{color[0] * 0.5f, color[1] * 0.5f, color[2] * 0.5f};
    Vec2 mid_hip = 0.5 * (P(kRHip) + P(kLHip));
    draw_segment(f, P(kRHip), P(kRKnee), 0.32 * u, legs);
    draw_segment(f, P(kRKnee), P(kRAnkle), 0.28 * u, legs);
    draw_segment(f, P(kLHip), P(kLKnee), 0.32 * u, legs);
    draw_segment(f, P(kLKnee), P(kLAnkle), 0.28 * u, legs);
    draw_segment(f, P(kNeck), mid_hip, 0.7 * u, color);
    draw_segment(f, P(kRShoulder), P(kLShoulder), 0.35 * u, color);
    draw_segment(f, P(kRHip), P(kLHip), 0.35 * u, color);
    draw_disk(f, P(kNose) + Vec2{0, -0.25 * u}, 0.75 * u, skin);
    for (auto [sh, el, wr] : {std::array{kRShoulder, kRElbow, kRWrist}, std::array{kLShoulder, kLElbow, kLWrist}}) {
        draw_segment(f, P(sh), P(el), 0.26 * u, color);
        draw_segment(f, P(el), P(wr), 0.22 * u, skin);
        draw_disk(f, P(wr), 0.34 * u, skin);
    }
}

PersonMotion random_motion(std::mt19937_64& rng, Motion kind, double center_x, double drift_amp) {
    PersonMotion m;
    m.kind = kind;
    m.center_x = center_x;
    m.drift_amp = drift_amp;
    m.drift_freq = uniform(rng, 0.1, 0.3);
    m.drift_phase = uniform(rng, 0, kTwoPi);
    m.phase = uniform(rng, 0, kTwoPi);
    m.side = (rng() & 1) ? 1 : -1;
    const double hue = uniform(rng, 0, 1);
    for (int c = 0; c < 3; ++c) {
        const double v = 0.5 + 0.45 * std::cos(kTwoPi * (hue + c / 3.0));
        m.color[c] = static_cast<float>(std::clamp(v, 0.05, 0.95));
    }
    switch (kind) {
        case Motion::Rub:
            m.freq = uniform(rng, 3.2, 4.2);
            m.amp = uniform(rng, 0.35, 0.45);
            break;
        case Motion::Reach:
            m.freq = uniform(rng, 0.35, 0.6);
            m.amp = uniform(rng, 0.7, 1.0);
            break;
        case Motion::Wave:
            m.freq = uniform(rng, 0.35, 0.6);
            m.amp = uniform(rng, 0.4, 0.55);
            break;
        case Motion::Idle:
            m.freq = uniform(rng, 0.2, 0.4);
            m.amp = 0.08;
            break;
    }
    return m;
}

}  // namespace

const char* motion_name(Motion m) {
    switch (m) {
        case Motion::Rub: return "rubbing hands";
        case Motion::Reach: return "reaching";
        case Motion::Wave: return "waving";
        case Motion::Idle: return "idle";
    }
    return "unknown";
}

void SceneSpec::validate() const {
    if (n_persons < 1) config_error("scene: n_persons must be >= 1");
    if (n_frames < kClipFrames) config_error(fmt::format("scene: n_frames must be >= {}", kClipFrames));
    if (width < 32 || height < 32) config_error("scene: frame must be at least 32x32");
    if (!(fps > 0)) config_error("scene: fps must be positive");
    if (class_label != 0 && class_label != 1) config_error("scene: class_label must be 0 or 1");
    if (!(keypoint_dropout >= 0 && keypoint_dropout <= 1)) config_error("scene: keypoint_dropout must lie in [0,1]");
    if (!motion.empty() && static_cast<int>(motion.size()) != n_persons)
        config_error("scene: motion list must have one entry per person");
}

std::vector<PersonMotion> default_motion(const SceneSpec& spec) {
    std::mt19937_64 rng(mix_seed(spec.seed, 0x40));
    std::vector<double> slots(spec.n_persons);
    for (int i = 0; i < spec.n_persons; ++i) slots[i] = (i + 0.5) / spec.n_persons;
    std::shuffle(slots.begin(), slots.end(), rng);
    const double spacing = 1.0 / spec.n_persons;
    std::vector<PersonMotion> out;
    for (int i = 0; i < spec.n_persons; ++i) {
        Motion kind = Motion::Idle;
        if (i == 0) kind = spec.class_label == 1 ? Motion::Rub : ((rng() & 1) ? Motion::Reach : Motion::Wave);
        const double jitter = spec.n_persons == 1 ? uniform(rng, -0.1, 0.1) : uniform(rng, -0.03, 0.03) * spacing;
        out.push_back(random_motion(rng, kind, slots[i] + jitter, spec.n_persons == 1 ? 0.03 : 0.06 * spacing));
    }
    return out;
}

Skeleton pose_at(const PersonMotion& m, double t, int width, int height) {
    const double u = height / 12.0;
    const double cx = (m.center_x + m.drift_amp * std::sin(kTwoPi * m.drift_freq * t + m.drift_phase)) * width;
    const double cy = 2.6 * u + 0.05 * u * std::sin(kTwoPi * 0.5 * m.drift_freq * t);
    Skeleton s{};
    auto set = [&](int j, Vec2 p) { s[j] = Keypoint{p.x, p.y, 1.0}; };
    const Vec2 neck{cx, cy};
    set(kNeck, neck);
    set(kNose, neck + Vec2{0, -1.1 * u});
    set(kREye, neck + Vec2{-0.25 * u, -1.35 * u});
    set(kLEye, neck + Vec2{0.25 * u, -1.35 * u});
    set(kREar, neck + Vec2{-0.5 * u, -1.2 * u});
    set(kLEar, neck + Vec2{0.5 * u, -1.2 * u});
    set(kRHip, neck + Vec2{-0.8 * u, 3.8 * u});
    set(kLHip, neck + Vec2{0.8 * u, 3.8 * u});
    set(kRKnee, neck + Vec2{-0.85 * u, 5.9 * u});
    set(kLKnee, neck + Vec2{0.85 * u, 5.9 * u});
    set(kRAnkle, neck + Vec2{-0.9 * u, 7.9 * u});
    set(kLAnkle, neck + Vec2{0.9 * u, 7.9 * u});
    const Vec2 rs = neck + Vec2{-1.4 * u, 0.2 * u}, ls = neck + Vec2{1.4 * u, 0.2 * u};
    set(kRShoulder, rs);
    set(kLShoulder, ls);

    const double sway = 0.08 * u * std::sin(kTwoPi * 0.3 * t + m.phase);
    Vec2 rw = neck + Vec2{-1.55 * u + sway, 2.9 * u}, lw = neck + Vec2{1.55 * u - sway, 2.9 * u};
    const double arg = kTwoPi * m.freq * t + m.phase;
    const double reach = 0.92 * (kUpperArm + kForearm) * u;
    switch (m.kind) {
        case Motion::Idle:
            rw = rw + Vec2{0, m.amp * u * std::sin(arg)};
            lw = lw + Vec2{0, m.amp * u * std::sin(arg + 1.0)};
            break;
        case Motion::Rub: {
            const double sep = (0.55 + m.amp * std::sin(arg)) * u;
            const Vec2 mid = neck + Vec2{0.08 * u * std::sin(0.5 * arg), 2.2 * u + 0.2 * u * std::sin(arg + 1.3)};
            rw = mid + Vec2{-0.5 * sep, 0};
            lw = mid + Vec2{0.5 * sep, 0};
            break;
        }
        case Motion::Reach:
        case Motion::Wave: {
            const double base = m.kind == Motion::Reach ? -0.3 : 0.85;
            const double theta = base + m.amp * std::sin(arg);
            const Vec2 sh = m.side > 0 ? ls : rs;
            const Vec2 w = sh + Vec2{m.side * reach * std::cos(theta), -reach * std::sin(theta)};
            (m.side > 0 ? lw : rw) = w;
            break;
        }
    }
    set(kRWrist, rw);
    set(kLWrist, lw);
    set(kRElbow, solve_elbow(rs, rw, kUpperArm * u, kForearm * u, cx, -1));
    set(kLElbow, solve_elbow(ls, lw, kUpperArm * u, kForearm * u, cx, 1));
    return s;
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    const std::vector<PersonMotion> motion = spec.motion.empty() ? default_motion(spec) : spec.motion;
    const Background bg = make_background(spec.seed, spec.width, spec.height);
    std::mt19937_64 rng(mix_seed(spec.seed, 0x5ce));
    const double u = spec.height / 12.0;

    Scene scene;
    scene.frames.fps = spec.fps;
    scene.frames.video_id = fmt::format("scene{:016x}", spec.seed);
    scene.actor_hint = 0;
    int actor_track = -1;
    for (int fi = 0; fi < spec.n_frames; ++fi) {
        const double t = fi / spec.fps;
        Frame f(spec.width, spec.height, 3);
        f.data = bg.px;
        PoseFrame pf;
        pf.frame_index = fi;
        std::vector<int> order(spec.n_persons);
        for (int i = 0; i < spec.n_persons; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        for (int i = 0; i < spec.n_persons; ++i) {
            Skeleton s = pose_at(motion[i], t, spec.width, spec.height);
            draw_person(f, s, motion[i].color, u);
            for (Keypoint& k : s) {
                const bool outside = k.x < 0 || k.y < 0 || k.x >= spec.width || k.y >= spec.height;
                const bool dropped = fi > 0 && uniform(rng, 0, 1) < spec.keypoint_dropout;
                if (outside || dropped) k = Keypoint{0, 0, 0};
            }
            pf.persons.push_back(PersonPose{i, s});
        }
        std::vector<PersonPose> listed;
        for (int idx : order) listed.push_back(pf.persons[idx]);
        pf.persons = std::move(listed);
        if (fi == 0) {
            int valid_before = 0;
            for (const PersonPose& p : pf.persons) {
                const bool has_roi = upper_body_roi(p.joints, RoiParams{}, spec.width, spec.height).has_value();
                if (p.hint == scene.actor_hint) {
                    if (!has_roi) data_error("scene actor has no upper-body ROI in the first frame");
                    actor_track = valid_before;
                    break;
                }
                if (has_roi) ++valid_before;
            }
        }
        for (float& v : f.data) v = std::clamp(v + static_cast<float>(uniform(rng, -0.006, 0.006)), 0.0f, 1.0f);
        scene.frames.frames.push_back(std::move(f));
        scene.poses.push_back(std::move(pf));
    }

    AnnotationRecord& a = scene.annotation;
    a.video_id = scene.frames.video_id;
    a.track_id = actor_track;
    a.start_frame = 0;
    a.end_frame = spec.n_frames;
    a.label = spec.class_label;
    a.action_name = motion_name(motion[0].kind);
    return scene;
}

Frame generate_still(std::uint64_t seed, Motion kind, int width, int height, int size, const RoiParams& roi) {
    std::mt19937_64 rng(mix_seed(seed, 0x571));
    PersonMotion m = random_motion(rng, kind, uniform(rng, 0.35, 0.65), 0.0);
    const double t = uniform(rng, 0, 10);
    const Background bg = make_background(mix_seed(seed, 0xbb), width, height);
    Frame f(width, height, 3);
    f.data = bg.px;
    Skeleton s = pose_at(m, t, width, height);
    draw_person(f, s, m.color, height / 12.0);
    for (float& v : f.data) v = std::clamp(v + static_cast<float>(uniform(rng, -0.006, 0.006)), 0.0f, 1.0f);
    auto box = upper_body_roi(s, roi, width, height);
    if (!box) box = BBox{0, 0, double(width), double(height)};
    BBox region = clip_region(*box, uniform(rng, 1.0, 1.75));
    Frame out = resize_and_center_crop(crop(f, region), size);
    if (rng() & 1) out = hflip(out);
    return out;
}

void DatasetConfig::validate() const {
    if (width < 32 || height < 32) config_error("dataset: frame must be at least 32x32");
    if (!(fps > 0)) config_error("dataset: fps must be positive");
    if (n_persons < 1) config_error("dataset: n_persons must be >= 1");
    if (!(keypoint_dropout >= 0 && keypoint_dropout <= 1)) config_error("dataset: keypoint_dropout must lie in [0,1]");
    for (const SceneGroup& g : groups) {
        if (g.count < 0) config_error("dataset: scene counts must be >= 0");
        if (g.label != 0 && g.label != 1) config_error("dataset: label must be 0 or 1");
        if (g.count == 0) continue;
        if (g.date_tags.empty()) config_error("dataset: every non-empty group needs date tags");
        if (g.total_frames) {
            if (*g.total_frames < kClipFrames * g.count)
                config_error(fmt::format("dataset: {} frames cannot fill {} clips of >= {} frames", *g.total_frames,
                                         g.count, kClipFrames));
        } else if (g.min_frames < kClipFrames || g.max_frames < g.min_frames) {
            config_error(fmt::format("dataset: need {} <= min_frames <= max_frames", kClipFrames));
        }
    }
}

DatasetConfig simple_dataset_config(int rubbing, int other, int dates, std::uint64_t seed) {
    if (rubbing < 0 || other < 0) config_error("dataset: scene counts must be >= 0");
    if (dates < 1) config_error("dataset: need at least one date");
    DatasetConfig cfg;
    cfg.seed = seed;
    std::vector<std::string> tags;
    for (int d = 0; d < dates; ++d) tags.push_back(fmt::format("D{:02d}", d + 1));
    SceneGroup pos;
    pos.label = 1;
    pos.count = rubbing;
    pos.date_tags = tags;
    SceneGroup neg = pos;
    neg.label = 0;
    neg.count = other;
    cfg.groups = {pos, neg};
    return cfg;
}

std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg, const fs::path& root) {
    cfg.validate();
    struct Job {
        SceneSpec spec;
        std::string video_id;
        std::string date_tag;
        bool synthetic;
    };
    std::vector<Job> jobs;
    int k = 0;
    for (const SceneGroup& g : cfg.groups) {
        std::vector<int> lengths(g.count);
        for (int i = 0; i < g.count; ++i) {
            if (g.total_frames) {
                lengths[i] = *g.total_frames / g.count + (i < *g.total_frames % g.count ? 1 : 0);
            } else {
                std::mt19937_64 rng(mix_seed(cfg.seed, 0x1e0000 + k + i));
                lengths[i] = g.min_frames + static_cast<int>(rng() % std::uint64_t(g.max_frames - g.min_frames + 1));
            }
        }
        for (int i = 0; i < g.count; ++i, ++k) {
            Job j;
            j.spec.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(k));
            j.spec.n_persons = cfg.n_persons;
            j.spec.n_frames = lengths[i];
            j.spec.width = cfg.width;
            j.spec.height = cfg.height;
            j.spec.fps = cfg.fps;
            j.spec.class_label = g.label;
            j.spec.keypoint_dropout = cfg.keypoint_dropout;
            j.video_id = fmt::format("v{:04d}", k);
            j.date_tag = g.date_tags[i % g.date_tags.size()];
            j.synthetic = g.synthetic;
            jobs.push_back(std::move(j));
        }
    }

    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) data_error(fmt::format("cannot create {}: {}", root.string(), ec.message()));
    std::vector<ManifestEntry> entries(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const Job& j = jobs[i];
        Scene s = generate_scene(j.spec);
        s.frames.video_id = j.video_id;
        s.frames.date_tag = j.date_tag;
        const fs::path vdir = root / "videos" / j.video_id;
        save_sequence(s.frames, vdir / "frames");
        save_poses(s.poses, vdir / "keypoints.txt");
        ManifestEntry& e = entries[i];
        e.video_id = j.video_id;
        e.date_tag = j.date_tag;
        e.label = j.spec.class_label;
        e.frames_dir = (fs::path("videos") / j.video_id / "frames").string();
        e.keypoints_file = (fs::path("videos") / j.video_id / "keypoints.txt").string();
        e.start_frame = s.annotation.start_frame;
        e.end_frame = s.annotation.end_frame;
        e.track_id = s.annotation.track_id;
        e.action_name = s.annotation.action_name;
        e.synthetic = j.synthetic;
    });

    nlohmann::json manifest = nlohmann::json::array();
    std::vector<AnnotationRecord> records;
    for (const ManifestEntry& e : entries) {
        manifest.push_back({{"video_id", e.video_id},
                            {"date_tag", e.date_tag},
                            {"class", e.label},
                            {"frames_dir", e.frames_dir},
                            {"keypoints_file", e.keypoints_file},
                            {"start_frame", e.start_frame},
                            {"end_frame", e.end_frame},
                            {"track_id", e.track_id},
                            {"action_name", e.action_name},
                            {"synthetic", e.synthetic}});
        records.push_back({e.video_id, e.date_tag, e.track_id, e.start_frame, e.end_frame, e.label, e.action_name,
                           e.synthetic});
    }
    std::ofstream out(root / "dataset.json");
    if (!out) data_error(fmt::format("cannot write {}", (root / "dataset.json").string()));
    out << manifest.dump(2) << '\n';
    out.close();
    save_annotations(records, root / "annotations.csv");
    return entries;
}

std::vector<ManifestEntry> load_manifest(const fs::path& root) {
    std::ifstream in(root / "dataset.json");
    if (!in) data_error(fmt::format("{}: missing dataset.json", root.string()));
    std::vector<ManifestEntry> out;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        for (const auto& e : j) {
            ManifestEntry m;
            m.video_id = e.at("video_id").get<std::string>();
            m.date_tag = e.at("date_tag").get<std::string>();
            m.label = e.at("class").get<int>();
            m.frames_dir = e.at("frames_dir").get<std::string>();
            m.keypoints_file = e.at("keypoints_file").get<std::string>();
            m.start_frame = e.at("start_frame").get<int>();
            m.end_frame = e.at("end_frame").get<int>();
            m.track_id = e.value("track_id", 0);
            m.action_name = e.value("action_name", std::string{});
            m.synthetic = e.value("synthetic", false);
            out.push_back(std::move(m));
        }
    } catch (const std::exception& e) {
        data_error(fmt::format("{}: malformed dataset.json: {}", root.string(), e.what()));
    }
    return out;
}

double mean_wrist_speed(const std::vector<PoseFrame>& poses, int hint, int frame_h) {
    const double u = frame_h / 12.0;
    double total = 0;
    int count = 0;
    const PersonPose* prev = nullptr;
    int prev_frame = -2;
    for (const PoseFrame& pf : poses) {
        const PersonPose* cur = nullptr;
        for (const PersonPose& p : pf.persons)
            if (p.hint == hint) cur = &p;
        if (cur && prev && pf.frame_index == prev_frame + 1) {
            for (int j : {kRWrist, kLWrist}) {
                const Keypoint &a = prev->joints[j], &b = cur->joints[j];
                if (a.confidence > 0 && b.confidence > 0) {
                    total += std::hypot(b.x - a.x, b.y - a.y) / u;
                    ++count;
                }
            }
        }
        prev = cur;
        prev_frame = pf.frame_index;
    }
    return count ? total / count : 0.0;
}

}  // namespace hhm
