// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "doctest.h"
#include "hhm/clips.hpp"
#include "hhm/flow.hpp"
#include "test_util.hpp"

#include <set>

using namespace hhm;
using hhm::test::TempDir;
using hhm::test::uniform;

namespace {

// Brute force: every start s with s + 16 <= n that lies on the stride grid.
int brute_windows(int n, int stride) {
    int c = 0;
    for (int s = 0; s + kClipFrames <= n; ++s) c += s % stride == 0;
    return c;
}

std::vector<int> split_lengths(int clips, int total, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> n(clips, 16);
    for (int left = total - 16 * clips; left > 0; --left) ++n[rng() % clips];
    return n;
}

FrameSequence textured_sequence(int n, int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FrameSequence s;
    s.video_id = "v";
    s.date_tag = "D01";
    for (int i = 0; i < n; ++i) {
        Frame f(w, h, 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c)
                    f.at(x, y, c) = static_cast<float>(0.5 + 0.3 * std::sin(0.3 * x + 0.2 * y + c + 0.4 * i));
        s.frames.push_back(f);
    }
    (void)rng;
    return s;
}

Track fixed_track(int n, BBox box) {
    Track t;
    for (int i = 0; i < n; ++i) t.entries.push_back({i, box});
    t.smoothed = t.entries;
    return t;
}

AnnotationRecord rec(std::string vid, std::string date, int len, int label, bool synth = false) {
    return {std::move(vid), std::move(date), 0, 0, len, label, label ? "rubbing" : "other", synth};
}

}  // namespace

TEST_CASE("windows: table-shaped positive rows give 111 and 112") {
    AugmentConfig cfg;
    for (auto [total, expected] : {std::pair{231, 111}, std::pair{232, 112}}) {
        int sum = 0;
        for (int n : split_lengths(8, total, total)) sum += static_cast<int>(window_starts(n, 1, cfg).size());
        CHECK(sum == expected);
    }
}

TEST_CASE("windows: negative of 20 frames, short clips, brute force") {
    AugmentConfig cfg;
    CHECK(window_starts(20, 0, cfg) == std::vector<int>{0, 4});
    CHECK(window_starts(15, 1, cfg).empty());
    CHECK(window_starts(16, 0, cfg) == std::vector<int>{0});
    for (int n = 1; n < 200; ++n) {
        CHECK(static_cast<int>(window_starts(n, 1, cfg).size()) == brute_windows(n, 1));
        CHECK(static_cast<int>(window_starts(n, 0, cfg).size()) == brute_windows(n, 4));
        if (n >= 16) {
            CHECK(static_cast<int>(window_starts(n, 1, cfg).size()) == n - 15);
            CHECK(static_cast<int>(window_starts(n, 0, cfg).size()) == (n - 16) / 4 + 1);
        }
    }
}

TEST_CASE("annotations: roundtrip and validation") {
    TempDir dir("ann");
    std::vector<AnnotationRecord> recs{{"v0001", "D01", 1, 0, 24, 1, "rubbing", false},
                                       {"v0002", "D02", 0, 3, 40, 0, "wearing gloves", true}};
    save_annotations(recs, dir / "a.csv");
    CHECK(load_annotations(dir / "a.csv") == recs);
    AnnotationRecord bad = recs[0];
    bad.end_frame = bad.start_frame;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = recs[0];
    bad.label = 2;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("sample_clip: eval determinism, seeded train, identity augmentation") {
    auto seq = textured_sequence(20, 80, 60, 1);
    Track t = fixed_track(20, {20, 10, 50, 45});
    AugmentConfig cfg;
    cfg.input_size = 24;
    auto e1 = sample_clip(seq, t, 2, cfg, SampleMode::Eval, AugmentDraw{});
    auto e2 = sample_clip(seq, t, 2, cfg, SampleMode::Eval, AugmentDraw{});
    CHECK(e1.data == e2.data);
    CHECK(e1.frames == 16);
    CHECK(e1.size == 24);
    CHECK(e1.data.size() == 16u * 24 * 24 * 3);
    CHECK(e1.start_frame == 2);

    auto r1 = sample_rng(9, "v", 2, 0), r2 = sample_rng(9, "v", 2, 0);
    auto t1 = sample_clip(seq, t, 2, cfg, SampleMode::Train, r1);
    auto t2 = sample_clip(seq, t, 2, cfg, SampleMode::Train, r2);
    CHECK(t1.data == t2.data);

    AugmentConfig id = cfg;
    id.scale_max = 1.0;
    id.flip_prob = 0.0;
    id.brightness_extent = 0.0;
    auto r3 = sample_rng(9, "v", 2, 0);
    CHECK(sample_clip(seq, t, 2, id, SampleMode::Train, r3).data == e1.data);

    CHECK_THROWS_AS(sample_clip(seq, fixed_track(2, {20, 10, 50, 45}), 2, cfg, SampleMode::Eval, AugmentDraw{}), Error);
    CHECK_THROWS_AS(sample_clip(seq, t, 8, cfg, SampleMode::Eval, AugmentDraw{}), Error);
}

TEST_CASE("sample_clip: cut region reproduces full-frame samples") {
    auto seq = textured_sequence(30, 90, 70, 2);
    std::mt19937_64 rng(5);
    AugmentConfig cfg;
    cfg.input_size = 20;
    for (int trial = 0; trial < 40; ++trial) {
        Track t;
        t.track_id = 3;
        for (int i = 2; i < 28; ++i) {
            const double x = uniform(rng, -10, 70), y = uniform(rng, -10, 50);
            t.entries.push_back({i, {x, y, x + uniform(rng, 8, 40), y + uniform(rng, 8, 40)}});
        }
        t = smooth_track(t, 4);
        const BBox bounds = sampling_bounds(t, 2, 28, cfg.scale_max, seq.width(), seq.height());
        CHECK(bounds.x1 >= 0);
        CHECK(bounds.x2 <= seq.width());
        VideoRegion region = cut_region(seq, 2, 28, bounds);
        CHECK(region.seq.size() == 26);
        for (int start = 2; start + kClipFrames <= 28; start += 3) {
            auto r = sample_rng(1, "v", start, trial);
            const AugmentDraw draw = draw_augment(cfg, r);
            for (SampleMode mode : {SampleMode::Eval, SampleMode::Train}) {
                auto full = sample_clip(seq, t, start, cfg, mode, draw);
                auto cut = sample_clip(region, t, start, cfg, mode, draw);
                CHECK(full.data == cut.data);
            }
        }
    }
    Track t = fixed_track(30, {20, 10, 50, 45});
    VideoRegion small = cut_region(seq, 0, 30, {30, 20, 40, 30});
    CHECK_THROWS_AS(sample_clip(small, t, 0, cfg, SampleMode::Eval, AugmentDraw{}), Error);
    VideoRegion late = cut_region(seq, 5, 30, {0, 0, 90, 70});
    CHECK_THROWS_AS(sample_clip(late, t, 2, cfg, SampleMode::Eval, AugmentDraw{}), Error);
    CHECK(sample_clip(late, t, 6, cfg, SampleMode::Eval, AugmentDraw{}).data ==
          sample_clip(seq, t, 6, cfg, SampleMode::Eval, AugmentDraw{}).data);
}

TEST_CASE("sample_clip: one box for all 16 frames") {
    // Frames identical -> every temporal slice identical, even though later boxes move.
    FrameSequence seq = textured_sequence(1, 80, 60, 2);
    for (int i = 1; i < 18; ++i) seq.frames.push_back(seq.frames[0]);
    Track t;
    for (int i = 0; i < 18; ++i) t.entries.push_back({i, {10.0 + i, 10, 40.0 + i, 40}});
    t.smoothed = t.entries;
    AugmentConfig cfg;
    cfg.input_size = 16;
    auto c = sample_clip(seq, t, 1, cfg, SampleMode::Eval, AugmentDraw{});
    const std::size_t per = 16u * 16 * 3;
    for (int f = 1; f < 16; ++f)
        CHECK(std::equal(c.data.begin(), c.data.begin() + per, c.data.begin() + f * per));
}

TEST_CASE("clip region grows the area by the scale factor about the center") {
    BBox b{10, 20, 30, 60};
    BBox r = clip_region(b, 1.75);
    CHECK(r.area() == doctest::Approx(b.area() * 1.75));
    CHECK(r.cx() == doctest::Approx(b.cx()));
    CHECK(r.cy() == doctest::Approx(b.cy()));
    CHECK(clip_region(b, 1.0) == b);
}

TEST_CASE("augment draws stay within configured ranges") {
    AugmentConfig cfg;
    std::mt19937_64 rng(4);
    int flips = 0;
    for (int i = 0; i < 2000; ++i) {
        AugmentDraw d = draw_augment(cfg, rng);
        CHECK(d.scale >= 1.0);
        CHECK(d.scale <= 1.75);
        CHECK(std::abs(d.brightness) <= 0.1);
        flips += d.flip;
    }
    CHECK(flips > 850);
    CHECK(flips < 1150);
    AugmentConfig bad;
    bad.scale_min = 2.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("flip consistency: flow of flipped frames equals flipped flow") {
    auto seq = textured_sequence(2, 48, 40, 3);
    TvL1Params p;
    Frame a = to_grayscale(seq.frames[0]), b = to_grayscale(seq.frames[1]);
    Frame f = tvl1_flow(a, b, p).to_frame();
    Frame g = tvl1_flow(hflip(a), hflip(b), p).to_frame();
    Frame hf = hflip(f);
    double diff = 0;
    for (std::size_t i = 0; i < g.data.size(); ++i) diff += std::abs(g.data[i] - hf.data[i]);
    CHECK(diff / static_cast<double>(g.data.size()) < 0.1);
}

TEST_CASE("split: equal dates, disjointness, synthetic to train, class coverage") {
    std::vector<AnnotationRecord> recs;
    for (int d = 0; d < 12; ++d)
        for (int label = 0; label < 2; ++label)
            recs.push_back(rec("v" + std::to_string(d) + "_" + std::to_string(label), "D" + std::to_string(d), 30, label));
    auto s = split_dataset(recs, {10, 1, 1}, 3);
    auto dates = [](const std::vector<AnnotationRecord>& v) {
        std::set<std::string> d;
        for (const auto& r : v) d.insert(r.date_tag);
        return d;
    };
    CHECK(dates(s.train).size() == 10);
    CHECK(dates(s.val).size() == 1);
    CHECK(dates(s.test).size() == 1);

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<AnnotationRecord> rs;
        const int nd = 3 + static_cast<int>(rng() % 10);
        for (int i = 0; i < 40; ++i)
            rs.push_back(rec("r" + std::to_string(i), "D" + std::to_string(rng() % nd), 16 + static_cast<int>(rng() % 30),
                             static_cast<int>(rng() & 1), (rng() % 7) == 0));
        std::set<std::string> all_dates;
        for (const auto& r : rs) all_dates.insert(r.date_tag);
        if (all_dates.size() < 3) {
            CHECK_THROWS_AS(split_dataset(rs, {10, 1, 1}, trial), Error);
            continue;
        }
        auto sp = split_dataset(rs, {10, 1, 1}, trial);
        CHECK(sp.train.size() + sp.val.size() + sp.test.size() == rs.size());
        std::set<std::string> a, b, c;
        for (const auto& r : sp.train) if (!r.synthetic) a.insert(r.date_tag);
        for (const auto& r : sp.val) {
            b.insert(r.date_tag);
            CHECK_FALSE(r.synthetic);
        }
        for (const auto& r : sp.test) {
            c.insert(r.date_tag);
            CHECK_FALSE(r.synthetic);
        }
        for (const auto& d : b) CHECK(a.count(d) == 0);
        for (const auto& d : c) CHECK(a.count(d) == 0);
        for (const auto& d : c) CHECK(b.count(d) == 0);
    }

    std::vector<AnnotationRecord> two_dates{rec("a", "D1", 20, 1), rec("b", "D2", 20, 0)};
    CHECK_THROWS_AS(split_dataset(two_dates), Error);
}

TEST_CASE("split: manifest roundtrip") {
    TempDir dir("split");
    std::vector<AnnotationRecord> recs;
    for (int d = 0; d < 6; ++d)
        for (int label = 0; label < 2; ++label)
            recs.push_back(rec("v" + std::to_string(d) + std::to_string(label), "D" + std::to_string(d), 20 + d, label));
    auto s = split_dataset(recs, {10, 1, 1}, 5);
    save_split(s, dir / "split.json");
    auto back = load_split(dir / "split.json", recs);
    CHECK(back.train == s.train);
    CHECK(back.val == s.val);
    CHECK(back.test == s.test);
    CHECK(back.seed == 5);
}
