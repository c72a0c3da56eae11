// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "doctest.h"
#include "hhm/synthgen.hpp"
#include "test_util.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

using namespace hhm;
using hhm::test::TempDir;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
    return files;
}

const PersonPose& person(const PoseFrame& pf, int hint) {
    for (const PersonPose& p : pf.persons)
        if (p.hint == hint) return p;
    FAIL("hint missing");
    return pf.persons.front();
}

std::vector<double> wrist_distance(const Scene& s) {
    std::vector<double> d;
    for (const PoseFrame& pf : s.poses) {
        const Skeleton& j = person(pf, s.actor_hint).joints;
        d.push_back(std::hypot(j[kRWrist].x - j[kLWrist].x, j[kRWrist].y - j[kLWrist].y));
    }
    return d;
}

int zero_crossings(const std::vector<double>& x, std::size_t from, std::size_t n) {
    double mean = 0;
    for (std::size_t i = from; i < from + n; ++i) mean += x[i];
    mean /= double(n);
    int count = 0;
    for (std::size_t i = from + 1; i < from + n; ++i)
        if ((x[i - 1] - mean) * (x[i] - mean) < 0) ++count;
    return count;
}

}  // namespace

TEST_CASE("synthgen: identical seeds give byte-identical datasets") {
    TempDir a("synth_a"), b("synth_b");
    DatasetConfig cfg = simple_dataset_config(2, 2, 2, 77);
    cfg.keypoint_dropout = 0.1;
    generate_dataset(cfg, a.path());
    generate_dataset(cfg, b.path());
    auto ta = tree(a.path()), tb = tree(b.path());
    CHECK(ta.size() > 4);
    CHECK(ta == tb);

    cfg.seed = 78;
    TempDir c("synth_c");
    generate_dataset(cfg, c.path());
    CHECK(tree(c.path()) != ta);
}

TEST_CASE("synthgen: rubbing wrists complete at least 3 cycles per 16 frames") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SceneSpec spec;
        spec.seed = seed;
        spec.n_frames = 40;
        spec.n_persons = 1 + static_cast<int>(seed % 3);
        spec.class_label = 1;
        Scene s = generate_scene(spec);
        const auto d = wrist_distance(s);
        for (std::size_t start = 0; start + 16 <= d.size(); ++start) {
            INFO("seed " << seed << " start " << start);
            CHECK(zero_crossings(d, start, 16) >= 6);
        }
    }
}

TEST_CASE("synthgen: other actions move the wrists slowly") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SceneSpec spec;
        spec.seed = seed;
        spec.n_frames = 32;
        spec.class_label = 0;
        Scene s = generate_scene(spec);
        CHECK(s.annotation.label == 0);
        CHECK(s.annotation.action_name != "rubbing hands");
        CHECK(zero_crossings(wrist_distance(s), 0, 16) <= 4);
    }
}

TEST_CASE("synthgen: two persons per keypoint frame") {
    SceneSpec spec;
    spec.seed = 3;
    spec.n_persons = 2;
    spec.n_frames = 20;
    Scene s = generate_scene(spec);
    REQUIRE(s.poses.size() == 20);
    REQUIRE(s.frames.frames.size() == 20);
    for (const PoseFrame& pf : s.poses) CHECK(pf.persons.size() == 2);

    TempDir dir("synth_kp");
    save_poses(s.poses, dir / "kp.txt");
    auto back = load_poses(dir / "kp.txt");
    REQUIRE(back.size() == 20);
    for (const PoseFrame& pf : back) CHECK(pf.persons.size() == 2);
}

TEST_CASE("synthgen: keypoints honor the pose input contract") {
    SceneSpec spec;
    spec.seed = 11;
    spec.n_persons = 3;
    spec.n_frames = 24;
    spec.keypoint_dropout = 0.3;
    Scene s = generate_scene(spec);
    TempDir dir("synth_contract");
    save_poses(s.poses, dir / "kp.txt");
    int missing = 0;
    for (const PoseFrame& pf : load_poses(dir / "kp.txt"))
        for (const PersonPose& p : pf.persons)
            for (const Keypoint& k : p.joints) {
                CHECK(k.confidence >= 0.0);
                CHECK(k.confidence <= 1.0);
                missing += k.confidence == 0.0;
            }
    CHECK(missing > 0);
    for (const PersonPose& p : s.poses.front().persons)
        for (const Keypoint& k : p.joints) CHECK(k.confidence == 1.0);
}

TEST_CASE("synthgen: dataset counts follow the configuration") {
    TempDir dir("synth_counts");
    auto entries = generate_dataset(simple_dataset_config(10, 10, 4, 5), dir.path());
    REQUIRE(entries.size() == 20);
    std::map<std::string, int> per_date;
    int pos = 0;
    for (const ManifestEntry& e : entries) {
        ++per_date[e.date_tag];
        pos += e.label;
        CHECK(fs::exists(dir.path() / e.frames_dir / "meta.json"));
        CHECK(fs::exists(dir.path() / e.keypoints_file));
        CHECK(e.end_frame - e.start_frame >= kClipFrames);
    }
    CHECK(pos == 10);
    CHECK(per_date.size() == 4);
    auto manifest = load_manifest(dir.path());
    CHECK(manifest.size() == 20);
    CHECK(load_annotations(dir / "annotations.csv").size() == 20);
}

TEST_CASE("synthgen: published training-split shape lands on disk") {
    DatasetConfig cfg;
    cfg.seed = 9;
    cfg.width = 48;
    cfg.height = 36;
    cfg.n_persons = 1;
    SceneGroup rub;
    rub.label = 1;
    rub.count = 10;
    rub.total_frames = 360;
    rub.date_tags = {"D01", "D02", "D03"};
    SceneGroup other = rub;
    other.label = 0;
    other.count = 67;
    other.total_frames = 4070;
    cfg.groups = {rub, other};
    TempDir dir("synth_table1");
    generate_dataset(cfg, dir.path());
    int clips[2] = {0, 0}, frames[2] = {0, 0};
    for (const AnnotationRecord& r : load_annotations(dir / "annotations.csv")) {
        ++clips[r.label];
        frames[r.label] += r.length();
    }
    CHECK(clips[1] == 10);
    CHECK(frames[1] == 360);
    CHECK(clips[0] == 67);
    CHECK(frames[0] == 4070);
}

TEST_CASE("synthgen: zero scenes give an empty but valid dataset") {
    TempDir dir("synth_empty");
    auto entries = generate_dataset(simple_dataset_config(0, 0, 3, 1), dir.path());
    CHECK(entries.empty());
    CHECK(load_manifest(dir.path()).empty());
    CHECK(load_annotations(dir / "annotations.csv").empty());
}

TEST_CASE("synthgen: invalid configurations are rejected") {
    CHECK_THROWS_AS(simple_dataset_config(-1, 2, 2, 0), Error);
    CHECK_THROWS_AS(simple_dataset_config(1, 1, 0, 0), Error);
    DatasetConfig cfg = simple_dataset_config(2, 2, 2, 0);
    cfg.groups[0].total_frames = 20;
    CHECK_THROWS_AS(cfg.validate(), Error);
    SceneSpec spec;
    spec.n_frames = 15;
    CHECK_THROWS_AS(generate_scene(spec), Error);
    spec.n_frames = 16;
    spec.n_persons = 0;
    CHECK_THROWS_AS(generate_scene(spec), Error);
}

TEST_CASE("synthgen: mean wrist speed separates the classes") {
    auto feature = [](std::uint64_t seed, int label) {
        SceneSpec spec;
        spec.seed = seed;
        spec.n_persons = 2;
        spec.n_frames = 24;
        spec.class_label = label;
        Scene s = generate_scene(spec);
        return mean_wrist_speed(s.poses, s.actor_hint, spec.height);
    };
    std::vector<double> x;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        x.push_back(feature(mix_seed(0xfeed, i), i % 2));
        y.push_back(i % 2);
    }
    // Logistic regression on the first 100 scenes, scored on the other 100.
    double mean = 0, var = 0;
    for (int i = 0; i < 100; ++i) mean += x[i] / 100;
    for (int i = 0; i < 100; ++i) var += (x[i] - mean) * (x[i] - mean) / 100;
    const double sd = std::sqrt(var);
    double w = 0, b = 0;
    for (int it = 0; it < 2000; ++it) {
        double gw = 0, gb = 0;
        for (int i = 0; i < 100; ++i) {
            const double z = (x[i] - mean) / sd;
            const double p = 1 / (1 + std::exp(-(w * z + b)));
            gw += (p - y[i]) * z / 100;
            gb += (p - y[i]) / 100;
        }
        w -= 0.5 * gw;
        b -= 0.5 * gb;
    }
    int correct = 0;
    for (int i = 100; i < 200; ++i) correct += ((w * (x[i] - mean) / sd + b) >= 0 ? 1 : 0) == y[i];
    CHECK(correct >= 95);
}
