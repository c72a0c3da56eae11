// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "doctest.h"
#include "hhm/videoio.hpp"
#include "test_util.hpp"

#include <cstring>
#include <fstream>

using namespace hhm;
using hhm::test::TempDir;
using hhm::test::uniform;

namespace {

Frame random_frame(int w, int h, int c, std::mt19937_64& rng, bool quantized = true) {
    Frame f(w, h, c);
    for (float& v : f.data) {
        const double u = uniform(rng);
        v = quantized ? static_cast<float>(std::round(u * 255) / 255.0) : static_cast<float>(u * 8 - 4);
    }
    return f;
}

FrameSequence random_sequence(int n, int w, int h, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FrameSequence s;
    for (int i = 0; i < n; ++i) s.frames.push_back(random_frame(w, h, c, rng, c != 2));
    s.fps = 15;
    s.video_id = "vid7";
    s.date_tag = "D03";
    return s;
}

}  // namespace

TEST_CASE("sequence: load 10 frames at 640x480") {
    TempDir dir("seq10");
    auto seq = random_sequence(10, kDefaultWidth, kDefaultHeight, 3, 1);
    save_sequence(seq, dir.path());
    auto back = load_sequence(dir.path());
    CHECK(back.size() == 10);
    CHECK(back.width() == 640);
    CHECK(back.height() == 480);
}

TEST_CASE("sequence: 8-bit roundtrip is exact and keeps metadata") {
    TempDir dir("rt");
    auto seq = random_sequence(3, 17, 9, 3, 2);
    seq.fps = 12.5;
    save_sequence(seq, dir.path());
    auto back = load_sequence(dir.path());
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(back.frames[i] == seq.frames[i]);
    CHECK(back.fps == 12.5);
    CHECK(back.date_tag == "D03");
    CHECK(back.video_id == "vid7");
}

TEST_CASE("sequence: grayscale and flow roundtrips") {
    TempDir dir("gray");
    auto gray = random_sequence(2, 5, 4, 1, 3);
    save_sequence(gray, dir / "g");
    CHECK(load_sequence(dir / "g").frames == gray.frames);
    auto flow = random_sequence(3, 6, 5, 2, 4);
    save_sequence(flow, dir / "f");
    auto back = load_sequence(dir / "f");
    CHECK(back.frames == flow.frames);
    CHECK(std::filesystem::exists(dir / "f" / "frame_000000.flo2"));
}

TEST_CASE("flo2: header layout and planar little-endian payload") {
    TempDir dir("flo");
    Frame f(2, 1, 2);
    f.data = {1.0f, -2.0f, 3.5f, 4.0f};  // (dx,dy) at x=0 then x=1
    write_flo2(f, dir / "a.flo2");
    std::ifstream in(dir / "a.flo2", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 4 + 4 + 4 + 16);
    CHECK(bytes.substr(0, 4) == "FLO2");
    float plane[4];
    std::memcpy(plane, bytes.data() + 12, 16);
    CHECK(plane[0] == 1.0f);
    CHECK(plane[1] == 3.5f);
    CHECK(plane[2] == -2.0f);
    CHECK(plane[3] == 4.0f);
    CHECK(read_flo2(dir / "a.flo2") == f);
}

TEST_CASE("sequence: empty directory, gaps, dimension mismatch") {
    TempDir dir("bad");
    auto seq = random_sequence(4, 6, 5, 3, 5);
    save_sequence(seq, dir / "s");
    std::filesystem::create_directories(dir / "empty");
    std::filesystem::copy_file(dir / "s" / "meta.json", dir / "empty" / "meta.json");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "empty"), doctest::Contains("no frames"), Error);

    std::filesystem::remove(dir / "s" / "frame_000002.ppm");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "s"), doctest::Contains("missing frame 2"), Error);

    save_sequence(seq, dir / "m");
    std::mt19937_64 rng(1);
    write_pnm(random_frame(7, 5, 3, rng), dir / "m" / "frame_000001.ppm");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "m"), doctest::Contains("frame_000001.ppm"), Error);
}

TEST_CASE("crop: identity, extent, outside") {
    std::mt19937_64 rng(6);
    Frame f = random_frame(640, 480, 3, rng);
    CHECK(crop(f, {0, 0, 640, 480}) == f);
    Frame c = crop(f, {10, 20, 110, 220});
    CHECK(c.width == 100);
    CHECK(c.height == 200);
    CHECK(c.at(0, 0, 1) == f.at(10, 20, 1));
    CHECK(c.at(99, 199, 2) == f.at(109, 219, 2));
    CHECK_THROWS_AS(crop(f, {700, 10, 800, 50}), Error);
}

TEST_CASE("crop: dimensions equal the clipped box for random boxes") {
    std::mt19937_64 rng(7);
    Frame f = random_frame(40, 30, 1, rng);
    for (int i = 0; i < 500; ++i) {
        const int x1 = static_cast<int>(rng() % 60) - 10, y1 = static_cast<int>(rng() % 50) - 10;
        const int x2 = x1 + 1 + static_cast<int>(rng() % 30), y2 = y1 + 1 + static_cast<int>(rng() % 30);
        const int cw = std::min(x2, 40) - std::max(x1, 0), ch = std::min(y2, 30) - std::max(y1, 0);
        BBox b{double(x1), double(y1), double(x2), double(y2)};
        if (cw <= 0 || ch <= 0) {
            CHECK_THROWS_AS(crop(f, b), Error);
            continue;
        }
        Frame c = crop(f, b);
        CHECK(c.width == cw);
        CHECK(c.height == ch);
    }
}

TEST_CASE("resize: constants, 2x1 to 3x1, same size") {
    Frame flat(448, 448, 3, 0.5f);
    Frame small = resize_bilinear(flat, 224, 224);
    for (float v : small.data) CHECK(v == 0.5f);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const float k = static_cast<float>(uniform(rng));
        Frame c(1 + rng() % 20, 1 + rng() % 20, 2, k);
        for (float v : resize_bilinear(c, 1 + rng() % 30, 1 + rng() % 30).data) CHECK(v == doctest::Approx(k).epsilon(1e-6));
    }
    Frame two(2, 1, 1);
    two.data = {0.0f, 1.0f};
    Frame three = resize_bilinear(two, 3, 1);
    CHECK(three.data[0] == 0.0f);
    CHECK(three.data[1] == doctest::Approx(0.5));
    CHECK(three.data[2] == 1.0f);
    Frame r = random_frame(13, 7, 3, rng);
    Frame same = resize_bilinear(r, 13, 7);
    for (std::size_t i = 0; i < r.data.size(); ++i) CHECK(std::abs(same.data[i] - r.data[i]) <= 1e-6f);
}

TEST_CASE("hflip: involution, pixel order, flow sign") {
    Frame ab(2, 1, 3);
    ab.data = {0.1f, 0.2f, 0.3f, 0.7f, 0.8f, 0.9f};
    Frame ba = hflip(ab);
    CHECK(ba.data == std::vector<float>{0.7f, 0.8f, 0.9f, 0.1f, 0.2f, 0.3f});
    std::mt19937_64 rng(9);
    Frame r = random_frame(9, 4, 3, rng);
    CHECK(hflip(hflip(r)) == r);
    Frame flow(4, 3, 2);
    for (int i = 0; i < 12; ++i) flow.data[2 * i] = 1.0f;
    Frame ff = hflip(flow);
    for (int i = 0; i < 12; ++i) {
        CHECK(ff.data[2 * i] == -1.0f);
        CHECK(ff.data[2 * i + 1] == 0.0f);
    }
    Frame rf = random_frame(5, 3, 2, rng, false);
    CHECK(hflip(hflip(rf)) == rf);
}

TEST_CASE("brightness: identity, clamp, arithmetic") {
    Frame f(1, 1, 3);
    f.data = {0.95f, 0.5f, 0.05f};
    CHECK(adjust_brightness(f, 0.0f) == f);
    Frame up = adjust_brightness(f, 0.1f);
    CHECK(up.data[0] == 1.0f);
    Frame down = adjust_brightness(f, -0.1f);
    CHECK(down.data[1] == doctest::Approx(0.4));
    CHECK(down.data[2] == 0.0f);
}

TEST_CASE("grayscale uses luminance weights") {
    Frame f(1, 1, 3);
    f.data = {1.0f, 0.5f, 0.25f};
    CHECK(to_grayscale(f).data[0] == doctest::Approx(0.299 + 0.587 * 0.5 + 0.114 * 0.25));
}

TEST_CASE("resize_and_center_crop gives a square of the requested size") {
    std::mt19937_64 rng(10);
    Frame f = random_frame(80, 50, 3, rng);
    Frame s = resize_and_center_crop(f, 56);
    CHECK(s.width == 56);
    CHECK(s.height == 56);
}
